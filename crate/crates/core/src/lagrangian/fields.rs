//! Frozen vorticity and streamfunction on a Cartesian sampling grid.

use serde::Serialize;

use super::model::HamiltonianModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub omega: f64,
    pub psi: f64,
    /// Points outside the deformed boundary are masked with NaN values.
    pub inside_flag: bool,
}

/// `omega_L` and `psi_L` at slow time `tau` on an `n x n` grid covering `[-extent, extent]²`.
pub fn reconstruct_fields(model: &HamiltonianModel, tau: f64, n: usize, extent: f64) -> Vec<FieldSample> {
    let n = n.max(2);
    let coord = |k: usize| -extent + 2.0 * extent * k as f64 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (coord(i), coord(j));
            let inside = model.contains(x, y, tau) && x.hypot(y) > 0.0;
            let (omega, psi) = if inside {
                (model.vorticity(x, y, tau), model.frozen_streamfunction(x, y, tau))
            } else {
                (f64::NAN, f64::NAN)
            };
            out.push(FieldSample {
                x,
                y,
                omega,
                psi,
                inside_flag: inside,
            });
        }
    }
    out
}
