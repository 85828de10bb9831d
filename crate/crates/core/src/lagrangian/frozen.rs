//! Closed orbits of the frozen streamfunction `psi_L` at fixed slow time.
//!
//! Orbits start and end on the positive `x` axis, which fixes `theta = 0` there.
//! Frequency and action are measured on the model's own frozen field so that the
//! dynamic phase is consistent with the integrated trajectory.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use super::model::HamiltonianModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrozenOrbit {
    pub tau: f64,
    pub level: f64,
    /// Where the orbit crosses the positive `x` axis.
    pub crossing_radius: f64,
    pub period: f64,
    /// Signed angular frequency `dpsi_hat/dI`.
    pub frequency: f64,
    /// Enclosed area over `2 pi`.
    pub action: f64,
}

#[derive(Debug, Clone, Copy)]
struct State {
    x: f64,
    y: f64,
    area: f64,
}

fn rk4_step(model: &HamiltonianModel, tau: f64, s: State, h: f64) -> State {
    let f = |x: f64, y: f64| {
        let (u, v) = model.velocity_at(x, y, tau, false);
        (u, v, 0.5 * (x * v - y * u))
    };
    let k1 = f(s.x, s.y);
    let k2 = f(s.x + 0.5 * h * k1.0, s.y + 0.5 * h * k1.1);
    let k3 = f(s.x + 0.5 * h * k2.0, s.y + 0.5 * h * k2.1);
    let k4 = f(s.x + h * k3.0, s.y + h * k3.1);
    State {
        x: s.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y: s.y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        area: s.area + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    }
}

/// Sign of the rotation: `+1` counterclockwise.
fn orientation(model: &HamiltonianModel) -> f64 {
    model.flow().dpsi0(0.5).signum()
}

/// Integrate from `start` until the orbit next crosses the positive `x` axis in the direction of
/// motion. Returns the elapsed time and the state at the crossing.
fn run_to_crossing(model: &HamiltonianModel, tau: f64, start: State, h: f64, min_time: f64) -> Result<(f64, State)> {
    let sign = orientation(model);
    let mut s = start;
    let mut t = 0.0;
    let limit = 64.0 * min_time.max(h) + 4096.0 * h;
    while t < limit {
        let next = rk4_step(model, tau, s, h);
        let crossed = sign * s.y < 0.0 && sign * next.y >= 0.0 && next.x > 0.0;
        if crossed && t + h >= min_time {
            let ys = |st: State| sign * st.y;
            let mut sub = h * ys(s).abs() / (ys(next) - ys(s)).max(f64::MIN_POSITIVE);
            for _ in 0..4 {
                let trial = rk4_step(model, tau, s, sub);
                let (_, v) = model.velocity_at(trial.x, trial.y, tau, false);
                if v == 0.0 {
                    break;
                }
                sub -= trial.y / v;
                sub = sub.clamp(0.0, h);
            }
            return Ok((t + sub, rk4_step(model, tau, s, sub)));
        }
        s = next;
        t += h;
    }
    Err(Error::Consistency(format!(
        "frozen orbit at tau = {tau} did not close within t = {limit:.3}"
    )))
}

fn estimated_period(model: &HamiltonianModel, r: f64) -> f64 {
    TAU * r / model.flow().dpsi0(r).abs()
}

/// Radius on the positive `x` axis where `psi_L = level`.
pub fn level_crossing(model: &HamiltonianModel, tau: f64, level: f64) -> Result<f64> {
    level_crossing_on_ray(model, tau, level, 0.0)
}

/// Radius on the ray at polar angle `sigma` where `psi_L = level`.
pub fn level_crossing_on_ray(model: &HamiltonianModel, tau: f64, level: f64, sigma: f64) -> Result<f64> {
    let outer = model.boundary_radius(tau, sigma);
    let (s, c) = sigma.sin_cos();
    let psi = |r: f64| model.frozen_streamfunction(r * c, r * s, tau) - level;
    let (mut lo, mut hi) = (model.inner_radius(), outer);
    let (flo, fhi) = (psi(lo), psi(hi));
    if flo * fhi > 0.0 {
        return Err(Error::Consistency(format!(
            "streamfunction level {level} is not attained on the ray sigma = {sigma} at tau = {tau}"
        )));
    }
    let rising = fhi > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (psi(mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn frozen_orbit(model: &HamiltonianModel, tau: f64, level: f64, steps_per_orbit: usize) -> Result<FrozenOrbit> {
    let r = level_crossing(model, tau, level)?;
    let estimate = estimated_period(model, r);
    let h = estimate / steps_per_orbit.max(16) as f64;
    let start = State { x: r, y: 0.0, area: 0.0 };
    let (period, end) = run_to_crossing(model, tau, start, h, 0.5 * estimate)?;
    let sign = orientation(model);
    Ok(FrozenOrbit {
        tau,
        level,
        crossing_radius: r,
        period,
        frequency: sign * TAU / period,
        action: sign * end.area / TAU,
    })
}

/// The frozen angle of `(x, y)` at slow time `tau`, measured from the positive `x` axis.
pub fn canonical_angle(model: &HamiltonianModel, x: f64, y: f64, tau: f64, steps_per_orbit: usize) -> Result<(f64, FrozenOrbit)> {
    let level = model.frozen_streamfunction(x, y, tau);
    let orbit = frozen_orbit(model, tau, level, steps_per_orbit)?;
    let h = orbit.period / steps_per_orbit.max(16) as f64;
    let (rest, _) = run_to_crossing(model, tau, State { x, y, area: 0.0 }, h, 0.0)?;
    let theta = (TAU * (1.0 - rest / orbit.period)).rem_euclid(TAU);
    Ok((theta, orbit))
}

/// Frequency and action of frozen orbits on a level-by-slow-time grid.
///
/// Levels use Chebyshev points; slow times are uniform over one period and interpolated
/// trigonometrically, since the frozen field is periodic on a closed path.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyTable {
    pub level_range: (f64, f64),
    pub levels: Vec<f64>,
    pub taus: Vec<f64>,
    pub period: f64,
    /// `[level][tau]`.
    pub frequency: Vec<Vec<f64>>,
    pub action: Vec<Vec<f64>>,
}

impl FrequencyTable {
    pub fn build(
        model: &HamiltonianModel,
        level_range: (f64, f64),
        n_levels: usize,
        n_tau: usize,
        steps_per_orbit: usize,
    ) -> Result<Self> {
        let (lo, hi) = level_range;
        let n_levels = n_levels.max(2);
        let n_tau = n_tau.max(1);
        let levels: Vec<f64> = (0..n_levels)
            .map(|i| {
                let s = (PI * i as f64 / (n_levels - 1) as f64).cos();
                0.5 * (lo + hi) + 0.5 * (hi - lo) * s
            })
            .collect();
        let period = model.path().period();
        let taus: Vec<f64> = (0..n_tau).map(|j| period * j as f64 / n_tau as f64).collect();
        let jobs: Vec<(usize, usize)> = (0..n_levels).flat_map(|i| (0..n_tau).map(move |j| (i, j))).collect();
        let orbits: Vec<FrozenOrbit> = jobs
            .par_iter()
            .map(|&(i, j)| frozen_orbit(model, taus[j], levels[i], steps_per_orbit))
            .collect::<Result<_>>()?;
        let mut frequency = vec![vec![0.0; n_tau]; n_levels];
        let mut action = vec![vec![0.0; n_tau]; n_levels];
        for (&(i, j), o) in jobs.iter().zip(&orbits) {
            frequency[i][j] = o.frequency;
            action[i][j] = o.action;
        }
        Ok(Self {
            level_range,
            levels,
            taus,
            period,
            frequency,
            action,
        })
    }

    fn trig(&self, values: &[f64], tau: f64) -> f64 {
        let n = values.len();
        if n == 1 {
            return values[0];
        }
        // Periodic sinc (Dirichlet) kernel for equispaced samples.
        let phase = |j: usize| PI * (tau / self.period - j as f64 / n as f64);
        let mut acc = 0.0;
        for (j, &v) in values.iter().enumerate() {
            let u = phase(j);
            let s = u.sin();
            let w = if s.abs() < 1e-14 {
                1.0
            } else if n % 2 == 1 {
                (n as f64 * u).sin() / (n as f64 * s)
            } else {
                (n as f64 * u).sin() / (n as f64 * u.tan())
            };
            acc += v * w;
        }
        acc
    }

    fn cheb(&self, values: &[f64], level: f64) -> f64 {
        let n = self.levels.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, (&c, &v)) in self.levels.iter().zip(values).enumerate() {
            let diff = level - c;
            if diff.abs() < 1e-300 {
                return v;
            }
            let mut w = if i % 2 == 0 { 1.0 } else { -1.0 };
            if i == 0 || i == n {
                w *= 0.5;
            }
            num += w * v / diff;
            den += w / diff;
        }
        num / den
    }

    fn eval(&self, grid: &[Vec<f64>], level: f64, tau: f64) -> f64 {
        let at_tau: Vec<f64> = grid.iter().map(|row| self.trig(row, tau)).collect();
        if self.level_range.1 - self.level_range.0 <= 0.0 {
            return at_tau[0];
        }
        self.cheb(&at_tau, level)
    }

    pub fn frequency_at(&self, level: f64, tau: f64) -> f64 {
        self.eval(&self.frequency, level, tau)
    }

    pub fn action_at(&self, level: f64, tau: f64) -> f64 {
        self.eval(&self.action, level, tau)
    }
}

/// The point on the ray at polar angle `sigma` whose frozen orbit at `tau` has the given action.
pub fn point_with_action(
    model: &HamiltonianModel,
    tau: f64,
    action: f64,
    sigma: f64,
    steps_per_orbit: usize,
) -> Result<(f64, f64)> {
    let r_guess = (2.0 * action).sqrt();
    let mut c0 = model.flow().psi0(r_guess);
    let mut a0 = frozen_orbit(model, tau, c0, steps_per_orbit)?.action - action;
    // dI/dpsi = 1/Omega on the undeformed disc.
    let mut c1 = c0 - a0 * model.flow().dpsi0(r_guess) / r_guess;
    for _ in 0..30 {
        let a1 = frozen_orbit(model, tau, c1, steps_per_orbit)?.action - action;
        if a1 == 0.0 || (a1 - a0).abs() < f64::MIN_POSITIVE {
            break;
        }
        let next = c1 - a1 * (c1 - c0) / (a1 - a0);
        (c0, a0, c1) = (c1, a1, next);
        if (c1 - c0).abs() <= 1e-15 * (1.0 + c1.abs()) {
            break;
        }
    }
    let r = level_crossing_on_ray(model, tau, c1, sigma)?;
    Ok((r * sigma.cos(), r * sigma.sin()))
}
