//! Linear second-order radial boundary-value problems on `(0, 1]`.
//!
//! An operator `a u'' + b u' + c u` is held in Euler-normalised form
//! `r² u'' + p(r) r u' + q(r) u`, which in `x = ln r` reads `u_xx + (p - 1) u_x + q u`.
//! The solution is pinned by a Dirichlet value at `r = 1` and, at the inner
//! cut-off, by the one-sided regularity condition `u_x = s u` where `s` is the
//! selected indicial exponent at the origin.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::baseflow::POINCARE_CONSTANT;
use crate::error::{Error, Result};
use crate::spectral::{condition_number, solve_complex, SharedGrid};

pub const CONDITION_LIMIT: f64 = 1e12;

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RadialOperator {
    label: String,
    mode: i32,
    p: Coefficient,
    q: Coefficient,
    /// `r² / a(r)`: maps a right-hand side of the unnormalised equation to the normalised one.
    weight: Coefficient,
    origin: Option<(f64, f64)>,
    /// `r² F'(r)` of an associated `Laplacian - F'` operator, for the coercivity probe.
    vorticity_ratio: Option<Coefficient>,
}

impl fmt::Debug for RadialOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialOperator")
            .field("label", &self.label)
            .field("mode", &self.mode)
            .field("origin", &self.origin)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub grid: SharedGrid,
    pub values: Vec<Complex64>,
    pub boundary_value: Complex64,
    pub regularity_exponent: f64,
    pub condition: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditioningReport {
    pub label: String,
    pub mode: i32,
    pub n: usize,
    pub condition: f64,
    pub min_singular_value: f64,
    pub exponents: Option<(f64, f64)>,
    /// `min_r (m² + r² F')` when the operator carries a vorticity ratio.
    pub coercivity_margin: Option<f64>,
    pub min_f_prime: Option<f64>,
    pub flagged: bool,
    pub reason: Option<String>,
}

impl RadialOperator {
    /// Build from `r² u'' + p r u' + q u`, with the unnormalised leading coefficient given through `weight = r²/a`.
    pub fn normalized(
        label: impl Into<String>,
        mode: i32,
        p: impl Fn(f64) -> f64 + Send + Sync + 'static,
        q: impl Fn(f64) -> f64 + Send + Sync + 'static,
        weight: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            mode,
            p: Arc::new(p),
            q: Arc::new(q),
            weight: Arc::new(weight),
            origin: None,
            vorticity_ratio: None,
        }
    }

    /// Build from `a u'' + b u' + c u`.
    pub fn general(
        label: impl Into<String>,
        mode: i32,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let a = Arc::new(a);
        let (a1, a2, a3) = (a.clone(), a.clone(), a);
        Self::normalized(
            label,
            mode,
            move |r| r * b(r) / a1(r),
            move |r| r * r * c(r) / a2(r),
            move |r| r * r / a3(r),
        )
    }

    /// Mode-`m` polar Laplacian `(1/r)(r u')' - m² u / r²`.
    pub fn laplacian(mode: i32) -> Self {
        let m2 = f64::from(mode * mode);
        Self::normalized("laplacian", mode, |_| 1.0, move |_| -m2, |r| r * r).with_origin(1.0, -m2)
    }

    /// Limits of `(p, q)` as `r -> 0`; otherwise the values at the inner cut-off are used.
    pub fn with_origin(mut self, p0: f64, q0: f64) -> Self {
        self.origin = Some((p0, q0));
        self
    }

    pub fn with_vorticity_ratio(mut self, ratio: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.vorticity_ratio = Some(Arc::new(ratio));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn mode(&self) -> i32 {
        self.mode
    }

    fn origin_coefficients(&self, r_min: f64) -> (f64, f64) {
        self.origin.unwrap_or_else(|| ((self.p)(r_min), (self.q)(r_min)))
    }

    /// Roots of `s² + (p0 - 1) s + q0 = 0`, sorted descending.
    pub fn indicial_exponents_at(&self, r_min: f64) -> Result<(f64, f64)> {
        let (p0, q0) = self.origin_coefficients(r_min);
        indicial_roots(p0, q0).ok_or(Error::ComplexExponents {
            mode: self.mode,
            discriminant: (p0 - 1.0).powi(2) - 4.0 * q0,
        })
    }

    pub fn indicial_exponents(&self) -> Result<(f64, f64)> {
        self.indicial_exponents_at(1e-9)
    }

    /// The behaviour kept at the origin: the upper root, unless both roots are admissible and one of
    /// them equals `|m|`, the exponent of a field that is smooth at the origin.
    pub fn regular_exponent(&self, r_min: f64) -> Result<f64> {
        let (hi, lo) = self.indicial_exponents_at(r_min)?;
        let smooth = f64::from(self.mode.abs());
        if lo >= 0.0 && hi > lo {
            for s in [lo, hi] {
                if (s - smooth).abs() < 1e-9 {
                    return Ok(smooth);
                }
            }
        }
        Ok(hi)
    }

    fn assemble(&self, grid: &SharedGrid, exponent: f64) -> DMatrix<f64> {
        let n = grid.n();
        let r = grid.radii();
        let mut a = grid.d2().clone();
        for i in 1..n {
            let pm1 = (self.p)(r[i]) - 1.0;
            let q = (self.q)(r[i]);
            for j in 0..=n {
                a[(i, j)] += pm1 * grid.d1()[(i, j)];
            }
            a[(i, i)] += q;
        }
        for j in 0..=n {
            a[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
            a[(n, j)] = grid.d1()[(n, j)];
        }
        a[(n, n)] -= exponent;
        a
    }

    fn coercivity(&self, grid: &SharedGrid) -> (Option<f64>, Option<f64>) {
        let Some(ratio) = &self.vorticity_ratio else {
            return (None, None);
        };
        let m2 = f64::from(self.mode * self.mode);
        let mut margin = f64::INFINITY;
        let mut min_fp = f64::INFINITY;
        for &r in grid.radii() {
            let v = ratio(r);
            margin = margin.min(m2 + v);
            min_fp = min_fp.min(v / (r * r));
        }
        (Some(margin), Some(min_fp))
    }

    pub fn conditioning_report(&self, grid: &SharedGrid) -> ConditioningReport {
        let exponent = self.regular_exponent(grid.r_min()).unwrap_or(0.0);
        self.conditioning_report_for(grid, exponent)
    }

    fn conditioning_report_for(&self, grid: &SharedGrid, exponent: f64) -> ConditioningReport {
        let exponents = self.indicial_exponents_at(grid.r_min()).ok();
        let (condition, min_sv) = condition_number(&self.assemble(grid, exponent));
        let (margin, min_fp) = self.coercivity(grid);
        let mut reasons = Vec::new();
        if exponents.is_none() {
            reasons.push("complex indicial exponents".to_string());
        }
        if !(condition <= CONDITION_LIMIT) {
            reasons.push(format!("condition number {condition:.3e} exceeds {CONDITION_LIMIT:.0e}"));
        }
        if let (Some(m), Some(fp)) = (margin, min_fp) {
            if m <= 0.0 && fp <= -POINCARE_CONSTANT {
                reasons.push(format!(
                    "coercivity lost: min(m² + r²F') = {m:.4}, min F' = {fp:.4} <= -c_poi"
                ));
            }
        }
        ConditioningReport {
            label: self.label.clone(),
            mode: self.mode,
            n: grid.n(),
            condition,
            min_singular_value: min_sv,
            exponents,
            coercivity_margin: margin,
            min_f_prime: min_fp,
            flagged: !reasons.is_empty(),
            reason: if reasons.is_empty() {
                None
            } else {
                Some(reasons.join("; "))
            },
        }
    }

    /// Solve `L[u] = rhs` (rhs sampled on the grid, in the unnormalised form) with `u(1) = bc1`.
    pub fn solve(&self, grid: &SharedGrid, rhs: &[Complex64], bc1: Complex64) -> Result<RadialSolution> {
        if rhs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "rhs has {} samples, grid has {}",
                rhs.len(),
                grid.len()
            )));
        }
        // With forcing, a smooth lower root cannot be kept: the upper-root piece is subdominant at the
        // cut-off, so its coefficient would be fixed by round-off. The upper root is kept instead.
        let forced = rhs.iter().any(|z| z.norm() > 0.0);
        let exponent = if forced {
            self.indicial_exponents_at(grid.r_min())?.0
        } else {
            self.regular_exponent(grid.r_min())?
        };
        let report = self.conditioning_report_for(grid, exponent);
        if report.flagged {
            return Err(Error::IllConditioned {
                label: format!("{}: {}", self.label, report.reason.unwrap_or_default()),
                mode: self.mode,
                condition: report.condition,
            });
        }
        let a = self.assemble(grid, exponent);
        let n = grid.n();
        let mut b: Vec<Complex64> = rhs
            .iter()
            .zip(grid.radii())
            .map(|(&g, &r)| g * (self.weight)(r))
            .collect();
        let closure = self.inner_closure(grid, &b, exponent);
        b[0] = bc1;
        b[n] = closure;
        let values = solve_complex(&a, &b).ok_or_else(|| Error::IllConditioned {
            label: self.label.clone(),
            mode: self.mode,
            condition: f64::INFINITY,
        })?;
        Ok(RadialSolution {
            grid: grid.clone(),
            values,
            boundary_value: bc1,
            regularity_exponent: exponent,
            condition: report.condition,
        })
    }

    /// Right-hand side of `u_x - s u` at the cut-off: the forced part is taken as the local power-law
    /// particular solution `g0 r^λ / (λ² + (p0-1) λ + q0)` of a source behaving like `r^λ`.
    fn inner_closure(&self, grid: &SharedGrid, normalized_rhs: &[Complex64], exponent: f64) -> Complex64 {
        let n = grid.n();
        let g = normalized_rhs[n];
        if g.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let gx = grid.dx(normalized_rhs)[n];
        let lambda = (gx / g).re;
        let (p0, q0) = self.origin_coefficients(grid.r_min());
        let denom = lambda * lambda + (p0 - 1.0) * lambda + q0;
        if denom.abs() < 1e-8 {
            return Complex64::new(0.0, 0.0);
        }
        g / denom * (lambda - exponent)
    }

    pub fn solve_fn(
        &self,
        grid: &SharedGrid,
        rhs: impl Fn(f64) -> Complex64,
        bc1: Complex64,
    ) -> Result<RadialSolution> {
        let samples: Vec<Complex64> = grid.radii().iter().map(|&r| rhs(r)).collect();
        self.solve(grid, &samples, bc1)
    }

    /// `max |L[u] - rhs|` over interior nodes, in the unnormalised form.
    pub fn residual(&self, sol: &RadialSolution, rhs: &[Complex64]) -> f64 {
        let grid = &sol.grid;
        let ux = grid.dx(&sol.values);
        let uxx = grid.dxx(&sol.values);
        let r = grid.radii();
        (1..grid.n())
            .map(|i| {
                let lu = uxx[i] + ux[i] * ((self.p)(r[i]) - 1.0) + sol.values[i] * (self.q)(r[i]);
                (lu / (self.weight)(r[i]) - rhs[i]).norm()
            })
            .fold(0.0, f64::max)
    }
}

impl RadialSolution {
    pub fn at(&self, r: f64) -> Complex64 {
        self.grid.interpolate(&self.values, r)
    }

    /// `|u| / r^s` on the two innermost nodes; comparable magnitudes mean the chosen behaviour holds.
    pub fn regularity_ratio(&self) -> (f64, f64) {
        let n = self.grid.n();
        let r = self.grid.radii();
        let s = self.regularity_exponent;
        (
            self.values[n].norm() / r[n].powf(s),
            self.values[n - 1].norm() / r[n - 1].powf(s),
        )
    }
}

pub fn indicial_roots(p0: f64, q0: f64) -> Option<(f64, f64)> {
    let b = p0 - 1.0;
    let disc = b * b - 4.0 * q0;
    if disc < -1e-12 {
        return None;
    }
    let sq = disc.max(0.0).sqrt();
    Some(((-b + sq) / 2.0, (-b - sq) / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::LogChebGrid;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid() -> SharedGrid {
        LogChebGrid::shared(64, 1e-3).unwrap()
    }

    #[test]
    fn harmonic_mode() {
        let g = grid();
        for m in 1..=6 {
            let sol = RadialOperator::laplacian(m)
                .solve_fn(&g, |_| c(0.0, 0.0), c(1.0, 0.0))
                .unwrap();
            for (k, &r) in g.radii().iter().enumerate() {
                assert!((sol.values[k] - r.powi(m)).norm() < 1e-11, "m={m} r={r}");
            }
        }
    }

    #[test]
    fn poisson_with_constant_source() {
        let g = grid();
        let sol = RadialOperator::laplacian(0)
            .solve_fn(&g, |_| c(4.0, 0.0), c(0.0, 0.0))
            .unwrap();
        for (k, &r) in g.radii().iter().enumerate() {
            assert!((sol.values[k].re - (r * r - 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn homogeneous_zero_data_gives_zero() {
        let g = grid();
        let sol = RadialOperator::laplacian(3)
            .solve_fn(&g, |_| c(0.0, 0.0), c(0.0, 0.0))
            .unwrap();
        assert!(sol.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn general_form_matches_normalized() {
        let g = grid();
        let op = RadialOperator::general("lap", 2, |_| 1.0, |r| 1.0 / r, |r| -4.0 / (r * r));
        let sol = op.solve_fn(&g, |_| c(0.0, 0.0), c(0.0, 2.0)).unwrap();
        for (k, &r) in g.radii().iter().enumerate() {
            assert!((sol.values[k] - c(0.0, 2.0 * r * r)).norm() < 1e-11);
        }
        let rhs = vec![c(0.0, 0.0); g.len()];
        assert!(op.residual(&sol, &rhs) < 1e-6);
    }

    #[test]
    fn indicial_roots_sorted() {
        let (hi, lo) = indicial_roots(1.0, -4.0).unwrap();
        assert_eq!((hi, lo), (2.0, -2.0));
        assert!(indicial_roots(1.0, 1.0).is_none());
    }

    #[test]
    fn laplacian_conditioning_unflagged() {
        let g = LogChebGrid::shared(32, 1e-3).unwrap();
        let report = RadialOperator::laplacian(2).conditioning_report(&g);
        assert!(report.condition.is_finite());
        assert!(!report.flagged);
    }
}
