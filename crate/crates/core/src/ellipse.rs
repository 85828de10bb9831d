//! Uniform-vorticity flow inside an ellipse rotating at angular velocity `epsilon dlambda/dtau`.
//!
//! The exact solution serves as ground truth for the perturbative pipeline at `alpha = 2`.
//! Angles here are measured from an axis rotating with the ellipse; [`frame_bridge`] gives the
//! offset to the fixed-axis convention used by the geometry module.

use serde::Serialize;

use crate::error::{Error, Result};

const INSIDE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotatingEllipse {
    pub a: f64,
    pub b: f64,
    /// Streamfunction constant: `psi = K` on the boundary at leading order.
    pub k: f64,
    /// `dlambda/dtau`, held constant.
    pub rate: f64,
    /// `lambda(0)`.
    pub lambda0: f64,
    pub epsilon: f64,
}

impl RotatingEllipse {
    pub fn new(a: f64, b: f64, k: f64, rate: f64, lambda0: f64, epsilon: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Deformation(format!("semi-axes must be positive, got a = {a}, b = {b}")));
        }
        if !(epsilon >= 0.0 && k.is_finite() && rate.is_finite() && lambda0.is_finite()) {
            return Err(Error::Deformation("non-finite ellipse parameters".into()));
        }
        Ok(Self { a, b, k, rate, lambda0, epsilon })
    }

    /// The ellipse carrying the same uniform vorticity `4A` as `psi0 = A r²`,
    /// i.e. `K = 2A a²b²/(a²+b²)`. Equals `A` for the unit disc.
    pub fn uniform_vorticity(amplitude: f64, a: f64, b: f64, rate: f64, lambda0: f64, epsilon: f64) -> Result<Self> {
        let (a2, b2) = (a * a, b * b);
        Self::new(a, b, 2.0 * amplitude * a2 * b2 / (a2 + b2), rate, lambda0, epsilon)
    }

    /// Area-preserving semi-axes for a mode-2 deformation of amplitude `delta` on the unit circle:
    /// `a⁴ = (1+4delta)/(1-4delta)`, `b = 1/a`, so `a = 1 + 2delta + O(delta²)`.
    ///
    /// Among ellipses matching the boundary at first order this is the one whose streamlines are
    /// the level sets of `psi0 - delta [rho_1, psi0]` for `psi0 = r²`.
    pub fn small_eccentricity_axes(delta: f64) -> Result<(f64, f64)> {
        if !(0.0..0.25).contains(&delta) {
            return Err(Error::Deformation(format!("delta = {delta} outside [0, 1/4)")));
        }
        let a = ((1.0 + 4.0 * delta) / (1.0 - 4.0 * delta)).powf(0.25);
        Ok((a, 1.0 / a))
    }

    pub fn lambda(&self, tau: f64) -> f64 {
        self.lambda0 + self.rate * tau
    }

    /// Coordinates in the frame rotating with the ellipse at fast time `t`.
    pub fn to_body_frame(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let (s, c) = self.lambda(self.epsilon * t).sin_cos();
        (x * c + y * s, -x * s + y * c)
    }

    pub fn from_body_frame(&self, x1: f64, x2: f64, t: f64) -> (f64, f64) {
        let (s, c) = self.lambda(self.epsilon * t).sin_cos();
        (x1 * c - x2 * s, x1 * s + x2 * c)
    }

    /// `x1²/a² + x2²/b² - 1`.
    pub fn boundary_function(&self, x: f64, y: f64, t: f64) -> f64 {
        let (x1, x2) = self.to_body_frame(x, y, t);
        x1 * x1 / (self.a * self.a) + x2 * x2 / (self.b * self.b) - 1.0
    }

    /// Coefficient of `x1² - x2²` in the potential-flow correction.
    pub fn strain_coefficient(&self) -> f64 {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        self.epsilon * self.rate * (a2 - b2) / (2.0 * (a2 + b2))
    }

    fn check_inside(&self, x: f64, y: f64, t: f64) -> Result<()> {
        if self.boundary_function(x, y, t) > INSIDE_TOLERANCE {
            return Err(Error::OutsideDomain { x, y });
        }
        Ok(())
    }

    pub fn exact_streamfunction(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        self.check_inside(x, y, t)?;
        let (x1, x2) = self.to_body_frame(x, y, t);
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        Ok(self.k * (x1 * x1 / a2 + x2 * x2 / b2) + self.strain_coefficient() * (x1 * x1 - x2 * x2))
    }

    /// `(dx/dt, dy/dt) = (-psi_y, psi_x)`.
    pub fn velocity(&self, x: f64, y: f64, t: f64) -> Result<(f64, f64)> {
        self.check_inside(x, y, t)?;
        let (x1, x2) = self.to_body_frame(x, y, t);
        let c = self.strain_coefficient();
        let g1 = 2.0 * self.k * x1 / (self.a * self.a) + 2.0 * c * x1;
        let g2 = 2.0 * self.k * x2 / (self.b * self.b) - 2.0 * c * x2;
        let (gx, gy) = self.from_body_frame(g1, g2, t);
        Ok((-gy, gx))
    }

    /// Leading-order vorticity `-Laplacian psi`, constant in the domain.
    pub fn vorticity(&self) -> f64 {
        2.0 * self.k * (1.0 / (self.a * self.a) + 1.0 / (self.b * self.b))
    }

    /// Body-frame action-angle map: `x1 = sqrt(2Ia/b) cos theta`, `x2 = sqrt(2Ib/a) sin theta`.
    pub fn from_action_angle(&self, action: f64, theta: f64) -> (f64, f64) {
        let (s, c) = theta.sin_cos();
        (
            (2.0 * action * self.a / self.b).sqrt() * c,
            (2.0 * action * self.b / self.a).sqrt() * s,
        )
    }

    pub fn to_action_angle(&self, x1: f64, x2: f64) -> (f64, f64) {
        let u = x1 * (self.b / self.a).sqrt();
        let v = x2 * (self.a / self.b).sqrt();
        let theta = v.atan2(u).rem_euclid(std::f64::consts::TAU);
        (0.5 * (u * u + v * v), theta)
    }

    /// The Hamiltonian in body-frame action-angle variables, term by term.
    pub fn hamiltonian(&self, action: f64, theta: f64) -> f64 {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let ab = self.a * self.b;
        let (s, c) = theta.sin_cos();
        let (c2, s2) = (c * c, s * s);
        let el = self.epsilon * self.rate;
        2.0 * self.k * action / ab
            + el * action / ab * ((a2 - b2) / (a2 + b2) * (a2 * c2 - b2 * s2) - (a2 * c2 + b2 * s2))
    }

    /// Body-frame angular frequency `dH/dI`, independent of `theta`.
    pub fn angular_frequency(&self) -> f64 {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let ab = self.a * self.b;
        2.0 * self.k / ab - self.epsilon * self.rate * 2.0 * ab / (a2 + b2)
    }

    /// `(dlambda/2ab)[(a²-b²)²/(a²+b²) - (a²+b²)]`, measured in the rotating frame.
    pub fn exact_geometric_angle(&self, delta_lambda: f64) -> f64 {
        exact_geometric_angle(self.a, self.b, delta_lambda)
    }
}

pub fn exact_geometric_angle(a: f64, b: f64, delta_lambda: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    delta_lambda / (2.0 * a * b) * ((a2 - b2).powi(2) / (a2 + b2) - (a2 + b2))
}

/// The rotating-frame offset `-delta_lambda`. Subtracting it from a rotating-frame angle
/// gives the fixed-frame angle.
pub fn frame_bridge(delta_lambda: f64) -> f64 {
    -delta_lambda
}

/// Fixed-frame geometric angle for one rotation schedule.
pub fn fixed_frame_geometric_angle(a: f64, b: f64, delta_lambda: f64) -> f64 {
    exact_geometric_angle(a, b, delta_lambda) - frame_bridge(delta_lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn circle_is_solid_body() {
        let e = RotatingEllipse::new(1.3, 1.3, 0.7, 0.0, 0.0, 0.01).unwrap();
        let psi = e.exact_streamfunction(0.4, -0.5, 3.0).unwrap();
        assert_relative_eq!(psi, 0.7 * 0.41 / 1.69, epsilon = 1e-15);
    }

    #[test]
    fn boundary_value_is_constant_in_body_frame() {
        let e = RotatingEllipse::new(1.1, 1.0 / 1.1, 0.5, 2.0, 0.3, 0.01).unwrap();
        let (x, y) = e.from_body_frame(1.1, 0.0, 0.0);
        let v = e.exact_streamfunction(x, y, 0.0).unwrap();
        let a2 = 1.21;
        let b2 = 1.0 / 1.21;
        let expected = 0.5 + 0.01 * 2.0 * (a2 - b2) * a2 / (2.0 * (a2 + b2));
        assert_relative_eq!(v, expected, epsilon = 1e-13);
        // The leading term equals K on the boundary.
        let lead = RotatingEllipse { epsilon: 0.0, ..e };
        for k in 0..32 {
            let th = TAU * f64::from(k) / 32.0;
            let (x1, x2) = (1.1 * th.cos(), th.sin() / 1.1);
            let (x, y) = lead.from_body_frame(x1 * (1.0 - 1e-14), x2 * (1.0 - 1e-14), 0.0);
            assert_relative_eq!(lead.exact_streamfunction(x, y, 0.0).unwrap(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        let e = RotatingEllipse::new(2.0, 0.5, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert!(matches!(e.exact_streamfunction(0.0, 0.6, 0.0), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn geometric_angle_examples() {
        assert_relative_eq!(exact_geometric_angle(1.0, 1.0, 1.7), -1.7, epsilon = 1e-15);
        assert_relative_eq!(
            exact_geometric_angle(2.0, 0.5, TAU),
            PI * (3.75f64.powi(2) / 4.25 - 4.25),
            epsilon = 1e-13
        );
        assert_relative_eq!(exact_geometric_angle(2.0, 0.5, TAU), -2.9568, epsilon = 1e-4);
        assert_eq!(frame_bridge(TAU), -TAU);
        assert_eq!(frame_bridge(0.0), 0.0);
        assert_eq!(frame_bridge(2.0 * TAU), -2.0 * TAU);
    }

    #[test]
    fn hamiltonian_matches_streamfunction_minus_frame_rotation() {
        let e = RotatingEllipse::new(1.2, 1.0 / 1.2, 0.5, 1.5, 0.0, 0.02).unwrap();
        for &(i, th) in &[(0.1, 0.3), (0.2, 2.0), (0.05, 4.4)] {
            let (x1, x2) = e.from_action_angle(i, th);
            let (x, y) = e.from_body_frame(x1, x2, 0.0);
            let psi = e.exact_streamfunction(x, y, 0.0).unwrap();
            let rigid = -e.epsilon * e.rate * 0.5 * (x1 * x1 + x2 * x2);
            assert_relative_eq!(e.hamiltonian(i, th), psi + rigid, epsilon = 1e-14);
            assert_relative_eq!(e.hamiltonian(i, th), e.angular_frequency() * i, epsilon = 1e-14);
            let (ib, tb) = e.to_action_angle(x1, x2);
            assert_relative_eq!(ib, i, epsilon = 1e-14);
            assert_relative_eq!(tb, th, epsilon = 1e-13);
        }
    }

    #[test]
    fn velocity_is_gradient_rotated() {
        let e = RotatingEllipse::new(1.1, 0.9, 0.6, 2.0, 0.4, 0.05).unwrap();
        let (x, y, t, h) = (0.3, -0.2, 1.3, 1e-6);
        let (u, v) = e.velocity(x, y, t).unwrap();
        let px = (e.exact_streamfunction(x + h, y, t).unwrap() - e.exact_streamfunction(x - h, y, t).unwrap()) / (2.0 * h);
        let py = (e.exact_streamfunction(x, y + h, t).unwrap() - e.exact_streamfunction(x, y - h, t).unwrap()) / (2.0 * h);
        assert_relative_eq!(u, -py, epsilon = 1e-8);
        assert_relative_eq!(v, px, epsilon = 1e-8);
        assert_relative_eq!(e.vorticity(), 2.0 * 0.6 * (1.0 / 1.21 + 1.0 / 0.81), epsilon = 1e-14);
    }

    #[test]
    fn uniform_vorticity_disc_constant() {
        let e = RotatingEllipse::uniform_vorticity(0.5, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(e.k, 0.5, epsilon = 1e-15);
        assert_relative_eq!(e.vorticity(), 2.0, epsilon = 1e-15);
    }
}
