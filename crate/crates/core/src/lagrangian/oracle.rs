//! Side-by-side trajectories in the perturbative model and the exact rotating ellipse.

use serde::Serialize;
use std::f64::consts::PI;

use super::model::{HamiltonianModel, PsiOrder};
use super::{advect, ParticleState};
use crate::baseflow::BaseFlow;
use crate::deformation::DeformationPath;
use crate::ellipse::{frame_bridge, RotatingEllipse};
use crate::error::Result;
use crate::perturbation::{PerturbationSolution, RadialNumerics, SecondOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseCheckOptions {
    pub delta: f64,
    pub epsilon: f64,
    /// Full turns of the ellipse over one period.
    pub rotations: f64,
    pub r0: f64,
    pub sigma0: f64,
    pub dt: f64,
    pub psi_order: PsiOrder,
    /// Semi-axes `(a, b)`; the small-eccentricity family when absent.
    pub axes: Option<(f64, f64)>,
}

impl Default for EllipseCheckOptions {
    fn default() -> Self {
        Self {
            delta: 0.05,
            epsilon: 0.01,
            rotations: 1.0,
            r0: 0.5,
            sigma0: 0.0,
            dt: 0.02,
            psi_order: PsiOrder::First,
            axes: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub t: f64,
    pub x_model: f64,
    pub y_model: f64,
    pub x_exact: f64,
    pub y_exact: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipseComparison {
    pub options: EllipseCheckOptions,
    pub ellipse: RotatingEllipse,
    pub max_position_error: f64,
    /// `10 (delta² + epsilon delta)`.
    pub bound: f64,
    /// Largest change of `H_model - psi_exact` along the exact trajectory.
    pub max_hamiltonian_error: f64,
    /// Geometric angle of the exact solution over the whole rotation, angles measured from the body axis.
    pub exact_geometric_angle: f64,
    /// The perturbative `delta² f_2 area_2` moved to the body axis by the frame bridge.
    pub predicted_geometric_angle: f64,
    pub points: Vec<ComparisonPoint>,
}

pub fn compare_with_ellipse(options: EllipseCheckOptions) -> Result<EllipseComparison> {
    let EllipseCheckOptions {
        delta,
        epsilon,
        rotations,
        r0,
        sigma0,
        dt,
        psi_order,
        axes,
    } = options;
    let flow = BaseFlow::power_law(1.0, 2.0)?;
    let solution = PerturbationSolution::solve(&flow, RadialNumerics::default(), &[2], SecondOrder::Full)?;
    let turns = 2.0 * rotations;
    let path = DeformationPath::new(delta, epsilon, 1.0)?.with_circle(2, 1.0, turns, 0.0)?;
    let model = HamiltonianModel::new(&flow, &path, &solution, psi_order)?;
    let (a, b) = match axes {
        Some(ab) => ab,
        None => RotatingEllipse::small_eccentricity_axes(delta)?,
    };
    let ellipse = RotatingEllipse::uniform_vorticity(1.0, a, b, PI * turns / path.period(), 0.0, epsilon)?;

    let start = ParticleState::from_polar(&model, r0, sigma0, 0.0)?;
    let t_end = path.period() / epsilon;
    let trajectory = advect(&model, start, t_end, dt)?;
    let h = trajectory.dt;

    let f = |x: f64, y: f64, t: f64| ellipse.velocity(x, y, t);
    let (mut x, mut y) = (start.x, start.y);
    let offset = model.value(x, y, 0.0)? - ellipse.exact_streamfunction(x, y, 0.0)?;
    let mut points = Vec::with_capacity(trajectory.points.len());
    let mut max_position_error: f64 = 0.0;
    let mut max_hamiltonian_error: f64 = 0.0;
    for (k, p) in trajectory.points.iter().enumerate() {
        if k > 0 {
            let t = p.t - h;
            let k1 = f(x, y, t)?;
            let k2 = f(x + 0.5 * h * k1.0, y + 0.5 * h * k1.1, t + 0.5 * h)?;
            let k3 = f(x + 0.5 * h * k2.0, y + 0.5 * h * k2.1, t + 0.5 * h)?;
            let k4 = f(x + h * k3.0, y + h * k3.1, t + h)?;
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        let error = (p.x - x).hypot(p.y - y);
        max_position_error = max_position_error.max(error);
        if model.contains(x, y, p.tau) {
            let gap = model.value(x, y, p.t)? - ellipse.exact_streamfunction(x, y, p.t)? - offset;
            max_hamiltonian_error = max_hamiltonian_error.max(gap.abs());
        }
        points.push(ComparisonPoint {
            t: p.t,
            x_model: p.x,
            y_model: p.y,
            x_exact: x,
            y_exact: y,
            error,
        });
    }
    let swept = PI * turns;
    let area = path.loop_area(2)?.area;
    Ok(EllipseComparison {
        options,
        ellipse,
        max_position_error,
        bound: 10.0 * (delta * delta + epsilon * delta),
        max_hamiltonian_error,
        exact_geometric_angle: ellipse.exact_geometric_angle(swept),
        predicted_geometric_angle: delta * delta * 8.0 * area + frame_bridge(swept),
        points,
    })
}
