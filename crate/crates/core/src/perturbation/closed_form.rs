//! Exact per-mode results for power-law base flows `psi0 = A r^alpha`.

use num_complex::Complex64;
use serde::Serialize;

/// `E(a, b) = 2ab + b² - 2a - 2b + m²`.
pub fn e_fn(a: f64, b: f64, m: i32) -> f64 {
    2.0 * a * b + b * b - 2.0 * a - 2.0 * b + f64::from(m * m)
}

/// `F(a, b) = E(a, b) / (a + b - 2)`.
pub fn f_fn(a: f64, b: f64, m: i32) -> f64 {
    e_fn(a, b, m) / (a + b - 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeConstants {
    pub m: i32,
    pub alpha: f64,
    /// `sqrt(m² + alpha² - 2 alpha)`
    pub alpha_m: f64,
    /// `alpha_m - alpha + 2`
    pub beta_m: f64,
    /// `alpha / (alpha_m + beta_m)`
    pub gamma_m: f64,
    pub e_beta_beta: f64,
    pub e_alpha_beta: f64,
    pub f_beta_beta: f64,
    pub f_alpha_beta: f64,
    pub p_m: f64,
    pub q_m: f64,
}

impl ModeConstants {
    /// Constants for `m >= 1`. Negative modes share the constants of `|m|`.
    pub fn new(alpha: f64, m: i32) -> Self {
        let m = m.abs();
        let alpha_m = (f64::from(m * m) + alpha * alpha - 2.0 * alpha).max(0.0).sqrt();
        let beta_m = alpha_m - alpha + 2.0;
        let gamma_m = alpha / (alpha_m + beta_m);
        let e_bb = e_fn(beta_m, beta_m, m);
        let e_ab = e_fn(alpha_m, beta_m, m);
        Self {
            m,
            alpha,
            alpha_m,
            beta_m,
            gamma_m,
            e_beta_beta: e_bb,
            e_alpha_beta: e_ab,
            f_beta_beta: e_bb / (2.0 * beta_m - 2.0),
            f_alpha_beta: e_ab / (alpha_m + beta_m - 2.0),
            p_m: gamma_m * e_bb - 2.0 * beta_m * (beta_m - 1.0),
            q_m: (1.0 - gamma_m) * e_ab,
        }
    }

    fn signed(&self, m: i32) -> f64 {
        f64::from(m.signum() * self.m)
    }

    /// `rho_{1,m} = i r^{beta_m} / m`.
    pub fn rho1(&self, m: i32, r: f64) -> Complex64 {
        Complex64::new(0.0, r.powf(self.beta_m) / self.signed(m))
    }

    /// `(i/m)[gamma_m r^{beta_m} + (1 - gamma_m) r^{alpha_m}]`.
    pub fn psi1bar_1(&self, m: i32, r: f64) -> Complex64 {
        let v = self.gamma_m * r.powf(self.beta_m) + (1.0 - self.gamma_m) * r.powf(self.alpha_m);
        Complex64::new(0.0, v / self.signed(m))
    }

    /// Coefficient of `L_m dL_m*` in the circle average of the second-order correction.
    pub fn psi1bar_2_avg(&self, m: i32, r: f64) -> Complex64 {
        let v = self.gamma_m * self.f_beta_beta * r.powf(2.0 * self.beta_m - 2.0)
            + (1.0 - self.gamma_m) * self.f_alpha_beta * r.powf(self.alpha_m + self.beta_m - 2.0);
        Complex64::new(0.0, -v / self.signed(m))
    }

    /// Coefficient of `dL_m ∧ dL_m*` in the circle average of `d Phi*` (without `delta²`).
    pub fn d_phi_star(&self, r: f64) -> Complex64 {
        self.psi1bar_2_avg(self.m, r) * 2.0
    }

    /// Coefficient of `dL_m ∧ dL_m*` in the circle average of `[Phi* ∧ Phi*]`.
    pub fn bracket(&self, r: f64) -> Complex64 {
        Complex64::new(0.0, -4.0 * self.beta_m / f64::from(self.m) * r.powf(2.0 * self.beta_m - 2.0))
    }

    pub fn kappa(&self, r: f64) -> Complex64 {
        self.d_phi_star(r) - self.bracket(r) * 0.5
    }

    /// `(4/m)(p_m r^{2 beta_m - 4} + q_m r^{alpha_m + beta_m - 4})`.
    pub fn f_m(&self, r: f64) -> f64 {
        4.0 / f64::from(self.m)
            * (self.p_m * r.powf(2.0 * self.beta_m - 4.0)
                + self.q_m * r.powf(self.alpha_m + self.beta_m - 4.0))
    }
}
