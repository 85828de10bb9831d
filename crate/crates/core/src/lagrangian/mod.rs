//! Particle trajectories under the slowly deformed flow and their angle bookkeeping.

pub mod fields;
pub mod frozen;
pub mod model;
pub mod oracle;

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::baseflow::BaseFlow;
use crate::deformation::DeformationPath;
use crate::error::{Error, Result};
use crate::perturbation::PerturbationSolution;

pub use fields::{reconstruct_fields, FieldSample};
pub use frozen::{canonical_angle, frozen_orbit, FrequencyTable, FrozenOrbit};
pub use model::{hamiltonian, HamiltonianModel, PolarSample, PsiOrder};
pub use oracle::{compare_with_ellipse, EllipseCheckOptions, EllipseComparison};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParticleState {
    pub t: f64,
    pub tau: f64,
    pub x: f64,
    pub y: f64,
    /// Pulled-back action `r0²/2`.
    pub action: f64,
    /// Pulled-back angle in `[0, 2 pi)`.
    pub theta: f64,
    /// Running total of the pulled-back angle by nearest continuation.
    pub theta_unwrapped: f64,
}

impl ParticleState {
    pub fn at(model: &HamiltonianModel, x: f64, y: f64, t: f64) -> Result<Self> {
        let tau = model.tau(t);
        if !model.contains(x, y, tau) {
            return Err(Error::OutsideDomain { x, y });
        }
        let (action, theta) = model.pulled_back_action_angle(x, y, tau);
        let theta = theta.rem_euclid(TAU);
        Ok(Self {
            t,
            tau,
            x,
            y,
            action,
            theta,
            theta_unwrapped: theta,
        })
    }

    pub fn from_polar(model: &HamiltonianModel, r: f64, sigma: f64, t: f64) -> Result<Self> {
        Self::at(model, r * sigma.cos(), r * sigma.sin(), t)
    }
}

/// One row of the trajectory table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub tau: f64,
    pub x: f64,
    pub y: f64,
    #[serde(rename = "I")]
    pub action: f64,
    pub theta_unwrapped: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    pub points: Vec<TrajectoryPoint>,
    /// Unwrapped polar angle change of the Eulerian position.
    pub polar_angle_change: f64,
}

impl Trajectory {
    pub fn first(&self) -> &TrajectoryPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectories hold at least one point")
    }
}

fn nearest_continuation(previous: f64, wrapped: f64) -> f64 {
    previous + (wrapped - previous + TAU / 2.0).rem_euclid(TAU) - TAU / 2.0
}

/// Frozen orbital frequency bound for the step-size check.
fn frequency_bound(model: &HamiltonianModel, r: f64) -> f64 {
    let r = r.max(1e-3);
    (model.flow().dpsi0(r) / r).abs() * 1.5
}

/// Classical RK4 in Cartesian coordinates with a fixed step.
pub fn advect(model: &HamiltonianModel, initial: ParticleState, t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("numerics.dt", "must be finite and > 0"));
    }
    let r0 = initial.x.hypot(initial.y);
    let omega = frequency_bound(model, r0);
    if dt > TAU / (20.0 * omega) {
        return Err(Error::config(
            "numerics.dt",
            format!("dt = {dt} does not resolve the orbital frequency {omega:.4} (need dt <= {:.4})", TAU / (20.0 * omega)),
        ));
    }
    let span = t_end - initial.t;
    if span < 0.0 {
        return Err(Error::config("run.t_end", "must not precede the initial time"));
    }
    let steps = (span / dt).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    let f = |x: f64, y: f64, t: f64| model.velocity(x, y, t, true);

    let mut points = Vec::with_capacity(steps + 1);
    let (mut x, mut y, mut t) = (initial.x, initial.y, initial.t);
    let mut theta = initial.theta_unwrapped;
    let mut sigma = y.atan2(x);
    let sigma0 = sigma;
    let record = |x: f64, y: f64, t: f64, theta: f64| -> TrajectoryPoint {
        let tau = model.tau(t);
        let (action, _) = model.pulled_back_action_angle(x, y, tau);
        TrajectoryPoint {
            t,
            tau,
            x,
            y,
            action,
            theta_unwrapped: theta,
            h: model.sample(x, y, t, true).value,
        }
    };
    points.push(record(x, y, t, theta));
    for k in 0..steps {
        let k1 = f(x, y, t);
        let k2 = f(x + 0.5 * h * k1.0, y + 0.5 * h * k1.1, t + 0.5 * h);
        let k3 = f(x + 0.5 * h * k2.0, y + 0.5 * h * k2.1, t + 0.5 * h);
        let k4 = f(x + h * k3.0, y + h * k3.1, t + h);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        t = initial.t + (k + 1) as f64 * h;
        let tau = model.tau(t);
        let r = x.hypot(y);
        let boundary = model.boundary_radius(tau, y.atan2(x));
        if !(r <= boundary) {
            return Err(Error::ParticleEscaped { t, x, y, r, boundary });
        }
        sigma = nearest_continuation(sigma, y.atan2(x));
        let (_, th) = model.pulled_back_action_angle(x, y, tau);
        theta = nearest_continuation(theta, th);
        points.push(record(x, y, t, theta));
    }
    Ok(Trajectory {
        dt: h,
        points,
        polar_angle_change: sigma - sigma0,
    })
}

/// Angle bookkeeping over one closed loop.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseDecomposition {
    pub total_dtheta: f64,
    pub dynamic: f64,
    pub geometric_measured: f64,
    pub geometric_predicted: Option<f64>,
    pub theta_start: f64,
    pub theta_end: f64,
}

/// Frozen-orbit quantities along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct FrozenAnalysis {
    /// `psi_L` at each trajectory point.
    pub levels: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// Action of the frozen orbit through each point.
    pub actions: Vec<f64>,
    pub table: FrequencyTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrozenOptions {
    pub n_levels: usize,
    pub n_tau: usize,
    pub steps_per_orbit: usize,
}

impl Default for FrozenOptions {
    fn default() -> Self {
        Self {
            n_levels: 7,
            n_tau: 16,
            steps_per_orbit: 1024,
        }
    }
}

pub fn analyze_frozen(model: &HamiltonianModel, trajectory: &Trajectory, options: FrozenOptions) -> Result<FrozenAnalysis> {
    let levels: Vec<f64> = trajectory
        .points
        .iter()
        .map(|p| model.frozen_streamfunction(p.x, p.y, p.tau))
        .collect();
    let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let margin = 0.05 * (hi - lo) + 1e-12 * (1.0 + lo.abs());
    let table = FrequencyTable::build(
        model,
        (lo - margin, hi + margin),
        options.n_levels,
        options.n_tau,
        options.steps_per_orbit,
    )?;
    let frequencies = trajectory
        .points
        .iter()
        .zip(&levels)
        .map(|(p, &c)| table.frequency_at(c, p.tau))
        .collect();
    let actions = trajectory
        .points
        .iter()
        .zip(&levels)
        .map(|(p, &c)| table.action_at(c, p.tau))
        .collect();
    Ok(FrozenAnalysis {
        levels,
        frequencies,
        actions,
        table,
    })
}

/// Composite Simpson rule on uniform samples (trapezoid on a trailing odd interval).
fn integrate_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    if n == 0 {
        return 0.0;
    }
    let even = n - n % 2;
    let mut acc = 0.0;
    for k in (0..even).step_by(2) {
        acc += h / 3.0 * (values[k] + 4.0 * values[k + 1] + values[k + 2]);
    }
    if n % 2 == 1 {
        acc += 0.5 * h * (values[n - 1] + values[n]);
    }
    acc
}

/// Split the angle change over a closed loop into the dynamic phase `int Omega dt` and the
/// geometric remainder. End-point angles are frozen-orbit angles from the positive `x` axis.
pub fn phase_split(
    model: &HamiltonianModel,
    trajectory: &Trajectory,
    analysis: &FrozenAnalysis,
    steps_per_orbit: usize,
) -> Result<PhaseDecomposition> {
    let path = model.path();
    path.ensure_closed()?;
    let first = trajectory.first();
    let last = trajectory.last();
    if (last.tau - first.tau - path.period()).abs() > 1e-9 * path.period() {
        return Err(Error::Deformation(format!(
            "trajectory spans tau in [{}, {}], not one full loop of period {}",
            first.tau,
            last.tau,
            path.period()
        )));
    }
    let dynamic = integrate_uniform(&analysis.frequencies, trajectory.dt);
    let (theta_start, _) = canonical_angle(model, first.x, first.y, first.tau, steps_per_orbit)?;
    let (theta_end, _) = canonical_angle(model, last.x, last.y, last.tau, steps_per_orbit)?;
    let raw = theta_end - theta_start;
    let windings = ((trajectory.polar_angle_change - raw) / TAU).round();
    let total = raw + TAU * windings;
    Ok(PhaseDecomposition {
        total_dtheta: total,
        dynamic,
        geometric_measured: total - dynamic,
        geometric_predicted: None,
        theta_start,
        theta_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftReport {
    pub initial_action: f64,
    pub max_drift: f64,
    /// Slow time at which the largest excursion occurs.
    pub tau_at_max: f64,
}

/// Largest excursion `max |I(t) - I(0)|` of the frozen-orbit action along the run.
pub fn action_drift(trajectory: &Trajectory, analysis: &FrozenAnalysis) -> DriftReport {
    let i0 = analysis.actions[0];
    let (k, drift) = analysis
        .actions
        .iter()
        .enumerate()
        .map(|(k, &a)| (k, (a - i0).abs()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    DriftReport {
        initial_action: i0,
        max_drift: drift,
        tau_at_max: trajectory.points[k].tau,
    }
}

/// How the starting radius of a loop run is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartPlacement {
    /// Start on the frozen orbit with action `r0²/2`, i.e. the orbit that is the circle of
    /// radius `r0` before deformation.
    #[default]
    Action,
    /// Start at the Eulerian point `(r0 cos sigma0, r0 sin sigma0)`.
    Eulerian,
}

/// Parameters of a loop run at two slownesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolonomyOptions {
    pub placement: StartPlacement,
    pub r0: f64,
    pub sigma0: f64,
    /// Steps per unit fast time are `1/dt`.
    pub dt: f64,
    pub psi_order: PsiOrder,
    pub frozen: FrozenOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoopRun {
    pub epsilon: f64,
    pub phase: PhaseDecomposition,
    pub drift: DriftReport,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolonomyMeasurement {
    pub coarse: LoopRun,
    pub fine: LoopRun,
    /// `2 G(epsilon/2) - G(epsilon)`.
    pub extrapolated: f64,
    /// `|G(epsilon/2) - G(epsilon)|`.
    pub residual: f64,
    pub drift_ratio: f64,
    pub predicted: Option<f64>,
}

pub fn run_loop(
    flow: &BaseFlow,
    path: &DeformationPath,
    solution: &PerturbationSolution,
    options: &HolonomyOptions,
) -> Result<(LoopRun, Trajectory)> {
    let model = HamiltonianModel::new(flow, path, solution, options.psi_order)?;
    let start = match options.placement {
        StartPlacement::Eulerian => ParticleState::from_polar(&model, options.r0, options.sigma0, 0.0)?,
        StartPlacement::Action => {
            let (x, y) = frozen::point_with_action(
                &model,
                0.0,
                0.5 * options.r0 * options.r0,
                options.sigma0,
                options.frozen.steps_per_orbit,
            )?;
            ParticleState::at(&model, x, y, 0.0)?
        }
    };
    let t_end = path.period() / path.epsilon();
    let trajectory = advect(&model, start, t_end, options.dt)?;
    let analysis = analyze_frozen(&model, &trajectory, options.frozen)?;
    let phase = phase_split(&model, &trajectory, &analysis, options.frozen.steps_per_orbit)?;
    let drift = action_drift(&trajectory, &analysis);
    Ok((
        LoopRun {
            epsilon: path.epsilon(),
            phase,
            drift,
            steps: trajectory.points.len() - 1,
        },
        trajectory,
    ))
}

/// Run the loop at `epsilon` and `epsilon/2` and extrapolate the geometric angle to `epsilon = 0`.
pub fn measure_holonomy(
    flow: &BaseFlow,
    path: &DeformationPath,
    solution: &PerturbationSolution,
    options: &HolonomyOptions,
) -> Result<HolonomyMeasurement> {
    let half = path.with_epsilon(0.5 * path.epsilon())?;
    let (coarse, fine) = rayon::join(
        || run_loop(flow, path, solution, options),
        || run_loop(flow, &half, solution, options),
    );
    let (coarse, _) = coarse?;
    let (fine, _) = fine?;
    let g1 = coarse.phase.geometric_measured;
    let g2 = fine.phase.geometric_measured;
    let drift_ratio = coarse.drift.max_drift / fine.drift.max_drift;
    Ok(HolonomyMeasurement {
        extrapolated: 2.0 * g2 - g1,
        residual: (g2 - g1).abs(),
        drift_ratio,
        predicted: None,
        coarse,
        fine,
    })
}
