//! Boundary of the deforming disc and the parameter path `Lambda(tau)`.
//!
//! The boundary at slow time `tau` is
//! `r(sigma) = 1 + delta sum_m L_m e^{i m sigma} - (delta²/2) sum_m |L_m|²`
//! with `L_{-m} = conj(L_m)` and `L_0 = 0`. Only `m > 0` is stored.
//!
//! Loop areas follow the convention `area_m = -(i/2) ∮ L_m dL_m*`, i.e. minus the
//! counterclockwise area: a loop traversed clockwise has positive area. A domain
//! rotating in the positive sense by `lambda` has `L_m ∝ e^{-i m lambda}`, so it
//! drives every mode clockwise and yields positive areas.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 1024;
const CLOSURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ModeCurve {
    /// `radius * exp(i (phase - 2 pi turns tau / T))`. Positive turns rotate the domain counterclockwise.
    Circle { radius: f64, turns: f64, phase: f64 },
    /// Uniform samples at `tau_k = k T / n`, `k = 0..=n`.
    Samples(Vec<Complex64>),
}

/// How slow time advances along the curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    /// Curves are traversed at their own rate.
    #[default]
    Uniform,
    /// Curves are evaluated at `T phi(tau/T)` with `phi(u) = u - sin(2 pi u)/(2 pi)`.
    /// The loop is unchanged but the deformation starts and stops at rest.
    SmoothStart,
}

impl Pacing {
    /// `(phi, dphi/du)` on the unit interval, extended periodically with unit drift.
    pub fn warp(self, u: f64) -> (f64, f64) {
        match self {
            Pacing::Uniform => (u, 1.0),
            Pacing::SmoothStart => {
                let (s, c) = (2.0 * PI * u).sin_cos();
                (u - s / (2.0 * PI), 1.0 - c)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeformationPath {
    delta: f64,
    epsilon: f64,
    period: f64,
    sample_count: usize,
    pacing: Pacing,
    modes: BTreeMap<i32, ModeCurve>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopArea {
    pub m: i32,
    pub area: f64,
}

impl DeformationPath {
    pub fn new(delta: f64, epsilon: f64, period: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::config("deformation.delta", "must be finite and >= 0"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config("deformation.epsilon", "must be finite and > 0"));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::config("deformation.period", "must be finite and > 0"));
        }
        Ok(Self {
            delta,
            epsilon,
            period,
            sample_count: DEFAULT_SAMPLES,
            pacing: Pacing::Uniform,
            modes: BTreeMap::new(),
        })
    }

    /// Number of uniform intervals used when analytic curves are sampled.
    pub fn with_sample_count(mut self, n: usize) -> Self {
        self.sample_count = n.max(3);
        self
    }

    pub fn with_pacing(mut self, pacing: Pacing) -> Self {
        self.pacing = pacing;
        self
    }

    pub fn pacing(&self) -> Pacing {
        self.pacing
    }

    pub fn with_circle(mut self, m: i32, radius: f64, turns: f64, phase: f64) -> Result<Self> {
        let m = check_mode(m)?;
        self.modes.insert(m.abs(), circle_for_sign(m, radius, turns, phase));
        Ok(self)
    }

    /// Uniform samples over `[0, T]` including both endpoints.
    pub fn with_samples(mut self, m: i32, values: Vec<Complex64>) -> Result<Self> {
        let m = check_mode(m)?;
        if values.len() < 3 {
            return Err(Error::Deformation(format!("mode {m}: fewer than 3 samples")));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Deformation(format!("mode {m}: non-finite sample")));
        }
        let values = if m < 0 {
            values.into_iter().map(|z| z.conj()).collect()
        } else {
            values
        };
        self.modes.insert(m.abs(), ModeCurve::Samples(values));
        Ok(self)
    }

    /// Build from samples given for both signs of `m`; the set must be conjugate-symmetric.
    pub fn from_signed_samples(
        delta: f64,
        epsilon: f64,
        period: f64,
        modes: &BTreeMap<i32, Vec<Complex64>>,
    ) -> Result<Self> {
        let mut path = Self::new(delta, epsilon, period)?;
        for (&m, values) in modes {
            check_mode(m)?;
            let partner = modes.get(&-m).ok_or_else(|| {
                Error::Deformation(format!("mode {m} present without its conjugate mode {}", -m))
            })?;
            if partner.len() != values.len()
                || values
                    .iter()
                    .zip(partner)
                    .any(|(a, b)| (a - b.conj()).norm() > 1e-12 * (1.0 + a.norm()))
            {
                return Err(Error::Deformation(format!(
                    "modes {m} and {} are not complex conjugates",
                    -m
                )));
            }
            if m > 0 {
                path = path.with_samples(m, values.clone())?;
            }
        }
        Ok(path)
    }

    /// Resample every mode at uniform `tau` after composing with a warp `u -> phi(u)` of `[0, 1]` onto itself.
    pub fn reparameterized(&self, warp: impl Fn(f64) -> f64, samples: usize) -> Result<Self> {
        let mut out = Self::new(self.delta, self.epsilon, self.period)?.with_sample_count(samples);
        for &m in self.modes.keys() {
            let values: Vec<Complex64> = (0..=samples)
                .map(|k| {
                    let u = warp(k as f64 / samples as f64);
                    self.lambda(m, u * self.period)
                })
                .collect();
            out = out.with_samples(m, values)?;
        }
        Ok(out)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config("deformation.epsilon", "must be finite and > 0"));
        }
        out.epsilon = epsilon;
        Ok(out)
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::config("deformation.delta", "must be finite and >= 0"));
        }
        out.delta = delta;
        Ok(out)
    }

    /// Positive mode indices carrying a curve.
    pub fn active_modes(&self) -> Vec<i32> {
        self.modes.keys().copied().collect()
    }

    pub fn curve(&self, m: i32) -> Option<&ModeCurve> {
        self.modes.get(&m.abs())
    }

    /// `L_m(tau)` for either sign of `m`; zero for inactive modes.
    pub fn lambda(&self, m: i32, tau: f64) -> Complex64 {
        self.lambda_with_rate(m, tau).0
    }

    /// `dL_m/dtau`.
    pub fn lambda_dot(&self, m: i32, tau: f64) -> Complex64 {
        self.lambda_with_rate(m, tau).1
    }

    pub fn lambda_with_rate(&self, m: i32, tau: f64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let Some(curve) = self.modes.get(&m.abs()) else {
            return (zero, zero);
        };
        let (u, du) = self.pacing.warp(tau / self.period);
        let tau = u * self.period;
        let (z, dz) = match curve {
            ModeCurve::Circle {
                radius,
                turns,
                phase,
            } => {
                let w = 2.0 * PI * turns / self.period;
                let z = Complex64::from_polar(*radius, phase - w * tau);
                (z, z * Complex64::new(0.0, -w))
            }
            ModeCurve::Samples(values) => self.interpolate(values, tau),
        };
        let dz = dz * du;
        if m < 0 {
            (z.conj(), dz.conj())
        } else {
            (z, dz)
        }
    }

    fn interpolate(&self, values: &[Complex64], tau: f64) -> (Complex64, Complex64) {
        let n = values.len() - 1;
        let h = self.period / n as f64;
        let closed = (values[n] - values[0]).norm() <= CLOSURE_TOLERANCE * (1.0 + values[0].norm());
        let s = tau / h;
        let base = s.floor() as i64;
        let start = if closed {
            base - 1
        } else {
            (base - 1).clamp(0, n as i64 - 3)
        };
        let fetch = |k: i64| -> Complex64 {
            if closed {
                values[k.rem_euclid(n as i64) as usize]
            } else {
                values[k as usize]
            }
        };
        let nodes: [f64; 4] = std::array::from_fn(|j| (start + j as i64) as f64);
        let mut value = Complex64::new(0.0, 0.0);
        let mut rate = Complex64::new(0.0, 0.0);
        for j in 0..4 {
            let mut l = 1.0;
            let mut dl = 0.0;
            for k in 0..4 {
                if k == j {
                    continue;
                }
                let denom = nodes[j] - nodes[k];
                let mut term = 1.0 / denom;
                for i in 0..4 {
                    if i != j && i != k {
                        term *= (s - nodes[i]) / (nodes[j] - nodes[i]);
                    }
                }
                dl += term;
                l *= (s - nodes[k]) / denom;
            }
            let f = fetch(start + j as i64);
            value += f * l;
            rate += f * (dl / h);
        }
        (value, rate)
    }

    /// Uniform samples of mode `m > 0` at `tau_k = k T / n`, `k = 0..=n`.
    pub fn samples(&self, m: i32) -> Vec<Complex64> {
        match self.modes.get(&m.abs()) {
            Some(ModeCurve::Samples(v)) if m > 0 => v.clone(),
            Some(ModeCurve::Samples(v)) => v.iter().map(|z| z.conj()).collect(),
            Some(ModeCurve::Circle { .. }) => (0..=self.sample_count)
                .map(|k| self.lambda(m, self.period * k as f64 / self.sample_count as f64))
                .collect(),
            None => vec![Complex64::new(0.0, 0.0); self.sample_count + 1],
        }
    }

    /// Largest endpoint mismatch over the active modes.
    pub fn closure_mismatch(&self) -> f64 {
        self.modes
            .keys()
            .map(|&m| (self.lambda(m, self.period) - self.lambda(m, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_closed(&self) -> bool {
        self.closure_mismatch() <= CLOSURE_TOLERANCE
    }

    pub fn ensure_closed(&self) -> Result<()> {
        let mismatch = self.closure_mismatch();
        if mismatch > CLOSURE_TOLERANCE {
            return Err(Error::OpenPath { mismatch });
        }
        Ok(())
    }

    pub fn boundary_radius_complex(&self, tau: f64, sigma: f64) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut norm2 = 0.0;
        for &m in self.modes.keys() {
            for s in [m, -m] {
                let l = self.lambda(s, tau);
                sum += l * Complex64::from_polar(1.0, f64::from(s) * sigma);
                norm2 += l.norm_sqr();
            }
        }
        Complex64::new(1.0 - 0.5 * self.delta * self.delta * norm2, 0.0) + sum * self.delta
    }

    pub fn boundary_radius(&self, tau: f64, sigma: f64) -> Result<f64> {
        if !(-1e-12..=self.period * (1.0 + 1e-12)).contains(&tau) {
            return Err(Error::Deformation(format!(
                "tau = {tau} outside [0, {}]",
                self.period
            )));
        }
        let z = self.boundary_radius_complex(tau, sigma);
        if z.im.abs() > 1e-12 {
            return Err(Error::Deformation(format!(
                "boundary radius has imaginary residue {:.3e}",
                z.im
            )));
        }
        Ok(z.re)
    }

    /// Signed area `-(i/2) ∮ L dL*`, evaluated spectrally from the uniform samples.
    pub fn loop_area(&self, m: i32) -> Result<LoopArea> {
        let values = self.samples(m);
        if values.len() < 3 {
            return Err(Error::Deformation(format!("mode {m}: fewer than 3 samples")));
        }
        if self.modes.contains_key(&m.abs()) {
            let n = values.len() - 1;
            let mismatch = (values[n] - values[0]).norm();
            if mismatch > CLOSURE_TOLERANCE * (1.0 + values[0].norm()) {
                return Err(Error::OpenPath { mismatch });
            }
        }
        Ok(LoopArea {
            m,
            area: -counterclockwise_area(&values[..values.len() - 1]),
        })
    }

    /// `|area enclosed by r(sigma) - pi|` at slow time `tau`.
    pub fn area_preservation_defect(&self, tau: f64) -> Result<f64> {
        let n = 4 * (self.modes.keys().max().copied().unwrap_or(1) as usize) + 64;
        let mut sum = 0.0;
        for k in 0..n {
            let sigma = 2.0 * PI * k as f64 / n as f64;
            let r = self.boundary_radius(tau, sigma)?;
            sum += r * r;
        }
        Ok((0.5 * sum * 2.0 * PI / n as f64 - PI).abs())
    }
}

fn check_mode(m: i32) -> Result<i32> {
    if m == 0 {
        return Err(Error::Deformation("mode 0 must vanish (area preservation)".into()));
    }
    Ok(m)
}

fn circle_for_sign(m: i32, radius: f64, turns: f64, phase: f64) -> ModeCurve {
    if m > 0 {
        ModeCurve::Circle {
            radius,
            turns,
            phase,
        }
    } else {
        ModeCurve::Circle {
            radius,
            turns: -turns,
            phase: -phase,
        }
    }
}

/// `pi sum_k k |c_k|²` for the periodic samples `z_0..z_{n-1}` (trapezoid rule with exact trigonometric derivative).
fn counterclockwise_area(z: &[Complex64]) -> f64 {
    let n = z.len();
    let mut buf = z.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let mut area = 0.0;
    for (k, c) in buf.iter().enumerate() {
        let freq = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        area += freq * c.norm_sqr();
    }
    PI * area / (n * n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn undeformed_disc() {
        let path = DeformationPath::new(0.05, 0.01, 1.0).unwrap();
        for &s in &[0.0, 1.0, 4.0] {
            assert_eq!(path.boundary_radius(0.5, s).unwrap(), 1.0);
        }
    }

    #[test]
    fn boundary_radius_direct_evaluation() {
        let path = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_samples(2, vec![c(1.0, 0.0); 4])
            .unwrap();
        let r = path.boundary_radius(0.3, 0.0).unwrap();
        assert_relative_eq!(r, 1.0 + 0.1 - 0.0025, epsilon = 1e-15);
    }

    #[test]
    fn imaginary_residue_vanishes() {
        let path = DeformationPath::new(0.1, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 1.0, 0.3)
            .unwrap()
            .with_circle(3, 0.5, -2.0, 1.1)
            .unwrap();
        for k in 0..50 {
            let z = path.boundary_radius_complex(0.37, 0.13 * k as f64);
            assert!(z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn clockwise_circle_has_positive_area() {
        let path = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 1.0, 0.0)
            .unwrap();
        assert_relative_eq!(path.loop_area(2).unwrap().area, PI, epsilon = 1e-12);
        assert_relative_eq!(path.loop_area(-2).unwrap().area, -PI, epsilon = 1e-12);
    }

    #[test]
    fn counterclockwise_unit_circle_samples() {
        let n = 512;
        let values: Vec<Complex64> = (0..=n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
            .collect();
        let path = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_samples(3, values)
            .unwrap();
        assert_relative_eq!(path.loop_area(3).unwrap().area, -PI, epsilon = 1e-12);
    }

    #[test]
    fn constant_loop_has_zero_area() {
        let path = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_samples(2, vec![c(0.4, -0.2); 16])
            .unwrap();
        assert!(path.loop_area(2).unwrap().area.abs() < 1e-14);
    }

    #[test]
    fn twice_traced_circle() {
        let path = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 2.0, 0.0)
            .unwrap();
        assert_relative_eq!(path.loop_area(2).unwrap().area, 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn open_path_rejected() {
        let path = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 0.5, 0.0)
            .unwrap();
        assert!(matches!(path.loop_area(2), Err(Error::OpenPath { .. })));
        let short = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_samples(2, vec![c(0.0, 0.0); 2]);
        assert!(short.is_err());
    }

    #[test]
    fn mode_zero_rejected() {
        let path = DeformationPath::new(0.05, 0.01, 1.0).unwrap();
        assert!(path.with_circle(0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn asymmetric_mode_set_rejected() {
        let mut modes = BTreeMap::new();
        modes.insert(2, vec![c(1.0, 1.0); 4]);
        modes.insert(-2, vec![c(1.0, 1.0); 4]);
        assert!(DeformationPath::from_signed_samples(0.1, 0.1, 1.0, &modes).is_err());
        modes.insert(-2, vec![c(1.0, -1.0); 4]);
        assert!(DeformationPath::from_signed_samples(0.1, 0.1, 1.0, &modes).is_ok());
        modes.remove(&-2);
        assert!(DeformationPath::from_signed_samples(0.1, 0.1, 1.0, &modes).is_err());
    }

    #[test]
    fn small_ellipse_semi_axes() {
        let delta = 1e-3;
        let path = DeformationPath::new(delta, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 1.0, 0.0)
            .unwrap();
        let a = path.boundary_radius(0.0, 0.0).unwrap();
        let b = path.boundary_radius(0.0, PI / 2.0).unwrap();
        assert!((a - (1.0 + 2.0 * delta)).abs() < 2.0 * delta * delta);
        assert!((b - (1.0 - 2.0 * delta)).abs() < 2.0 * delta * delta);
    }

    #[test]
    fn cubic_interpolation_of_samples() {
        let n = 256;
        let values: Vec<Complex64> = (0..=n)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        let sampled = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_samples(2, values)
            .unwrap();
        let exact = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 1.0, 0.0)
            .unwrap();
        for &tau in &[0.0, 0.001, 0.4999, 0.73, 1.0] {
            let (a, da) = sampled.lambda_with_rate(2, tau);
            let (b, db) = exact.lambda_with_rate(2, tau);
            assert!((a - b).norm() < 1e-8);
            assert!((da - db).norm() < 1e-4);
        }
    }

    #[test]
    fn area_defect_is_exact_quartic() {
        // r² averages to 1 + (delta² S / 2)², with S = sum over all signed modes of |L_m|².
        for &delta in &[0.05, 0.025] {
            let path = DeformationPath::new(delta, 0.01, 1.0)
                .unwrap()
                .with_circle(2, 1.0, 1.0, 0.0)
                .unwrap();
            let defect = path.area_preservation_defect(0.2).unwrap();
            assert_relative_eq!(defect, PI * delta.powi(4), max_relative = 1e-9);
            assert!(defect <= delta.powi(3));
        }
        let zero = DeformationPath::new(0.0, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 1.0, 0.0)
            .unwrap();
        assert_eq!(zero.area_preservation_defect(0.0).unwrap(), 0.0);
    }
}
