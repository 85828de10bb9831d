//! Chebyshev–Gauss–Lobatto collocation in the logarithmic radius `x = ln r`.
//!
//! Power laws `r^s` are entire functions of `x`, and the Euler-type radial
//! operators met in this crate have constant coefficients in `x`. Node 0 is the
//! outer boundary `r = 1`, node `n` is the inner cut-off `r = r_min`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LogChebGrid {
    n: usize,
    r_min: f64,
    x: Vec<f64>,
    r: Vec<f64>,
    weights: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

pub type SharedGrid = Arc<LogChebGrid>;

impl LogChebGrid {
    pub fn new(n: usize, r_min: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::config("numerics.n_radial", "need at least 4 intervals"));
        }
        if !(r_min > 0.0 && r_min < 1.0) {
            return Err(Error::config("numerics.r_min", "must lie in (0, 1)"));
        }
        let half_len = -r_min.ln() / 2.0;
        let s: Vec<f64> = (0..=n).map(|j| (j as f64 * PI / n as f64).cos()).collect();
        let x: Vec<f64> = s.iter().map(|&sj| (sj - 1.0) * half_len).collect();
        let r: Vec<f64> = x.iter().map(|&xj| xj.exp()).collect();

        let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
        let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
        for i in 0..=n {
            for j in 0..=n {
                if i != j {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    d[(i, j)] = c(i) / c(j) * sign / (s[i] - s[j]);
                }
            }
        }
        for i in 0..=n {
            let row_sum: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
            d[(i, i)] = -row_sum;
        }
        let d1 = d / half_len;
        let d2 = &d1 * &d1;
        let weights = (0..=n)
            .map(|j| {
                let w = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n {
                    0.5 * w
                } else {
                    w
                }
            })
            .collect();
        Ok(Self {
            n,
            r_min,
            x,
            r,
            weights,
            d1,
            d2,
        })
    }

    pub fn shared(n: usize, r_min: f64) -> Result<SharedGrid> {
        Self::new(n, r_min).map(Arc::new)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn log_radii(&self) -> &[f64] {
        &self.x
    }

    /// `d/dx` collocation matrix.
    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    /// `d²/dx²` collocation matrix.
    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    pub fn same_as(&self, other: &LogChebGrid) -> bool {
        self.n == other.n && self.r_min == other.r_min
    }

    pub fn dx(&self, f: &[Complex64]) -> Vec<Complex64> {
        apply(&self.d1, f)
    }

    pub fn dxx(&self, f: &[Complex64]) -> Vec<Complex64> {
        apply(&self.d2, f)
    }

    /// `d/dr = (1/r) d/dx`.
    pub fn dr(&self, f: &[Complex64]) -> Vec<Complex64> {
        self.dx(f)
            .into_iter()
            .zip(&self.r)
            .map(|(v, &r)| v / r)
            .collect()
    }

    /// Mode-`m` polar Laplacian `(1/r)(r f')' - m² f / r² = (f_xx - m² f) / r²`.
    pub fn laplacian(&self, f: &[Complex64], m: i32) -> Vec<Complex64> {
        let m2 = f64::from(m * m);
        self.dxx(f)
            .into_iter()
            .zip(f)
            .zip(&self.r)
            .map(|((fxx, &fv), &r)| (fxx - fv * m2) / (r * r))
            .collect()
    }

    /// Antiderivative in `x` with `F(x_min) = start`.
    pub fn integrate_x(&self, f: &[Complex64], start: Complex64) -> Vec<Complex64> {
        let n = self.n;
        let mut a = self.d1.clone();
        for j in 0..=n {
            a[(n, j)] = if j == n { 1.0 } else { 0.0 };
        }
        let mut rhs: Vec<Complex64> = f.to_vec();
        rhs[n] = start;
        solve_complex(&a, &rhs).expect("antiderivative system is nonsingular")
    }

    /// Barycentric interpolation of grid samples at radius `r` (inside `[r_min, 1]`).
    pub fn interpolate(&self, f: &[Complex64], r: f64) -> Complex64 {
        let x = r.ln();
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..=self.n {
            let diff = x - self.x[j];
            if diff.abs() < 1e-15 {
                return f[j];
            }
            let w = self.weights[j] / diff;
            num += f[j] * w;
            den += w;
        }
        num / den
    }

    /// Normalized weights `w` with `f(r) = sum_j w_j f_j`. `out` must have `len()` entries.
    pub fn fill_interpolation_weights(&self, r: f64, out: &mut [f64]) {
        let x = r.ln();
        if let Some(j) = (0..=self.n).find(|&j| (x - self.x[j]).abs() < 1e-15) {
            out.iter_mut().for_each(|w| *w = 0.0);
            out[j] = 1.0;
            return;
        }
        let mut den = 0.0;
        for j in 0..=self.n {
            out[j] = self.weights[j] / (x - self.x[j]);
            den += out[j];
        }
        out.iter_mut().for_each(|w| *w /= den);
    }

    /// Interpolate several sample vectors at once (shared barycentric weights).
    pub fn interpolate_many<const K: usize>(&self, fs: [&[Complex64]; K], r: f64) -> [Complex64; K] {
        let x = r.ln();
        let mut out = [Complex64::new(0.0, 0.0); K];
        let mut den = 0.0;
        for j in 0..=self.n {
            let diff = x - self.x[j];
            if diff.abs() < 1e-15 {
                for k in 0..K {
                    out[k] = fs[k][j];
                }
                return out;
            }
            let w = self.weights[j] / diff;
            for k in 0..K {
                out[k] += fs[k][j] * w;
            }
            den += w;
        }
        for v in &mut out {
            *v /= den;
        }
        out
    }
}

/// Chebyshev series `sum c_k T_k(s)` on an interval `[lo, hi]` mapped to `s in [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl ChebSeries {
    pub fn new(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        Self { lo, hi, coeffs }
    }

    /// Least-squares fit of degree `degree` to scattered samples.
    pub fn fit(lo: f64, hi: f64, t: &[f64], y: &[f64], degree: usize) -> Option<Self> {
        let rows = t.len();
        let cols = degree + 1;
        if rows < cols {
            return None;
        }
        let mut a = DMatrix::<f64>::zeros(rows, cols);
        for (i, &ti) in t.iter().enumerate() {
            let s = (2.0 * ti - lo - hi) / (hi - lo);
            let (mut t0, mut t1) = (1.0, s);
            for k in 0..cols {
                a[(i, k)] = t0;
                let t2 = 2.0 * s * t1 - t0;
                t0 = t1;
                t1 = t2;
            }
        }
        let b = nalgebra::DVector::from_column_slice(y);
        let svd = a.svd(true, true);
        let c = svd.solve(&b, 1e-14).ok()?;
        Some(Self::new(lo, hi, c.iter().copied().collect()))
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = (2.0 * t - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * s * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        s * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Derivative with respect to `t`.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::new(self.lo, self.hi, vec![0.0]);
        }
        let mut d = vec![0.0; n];
        for k in (0..n - 1).rev() {
            let next = if k + 2 < n { d[k + 2] } else { 0.0 };
            d[k] = next + 2.0 * (k + 1) as f64 * self.coeffs[k + 1];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let scale = 2.0 / (self.hi - self.lo);
        Self::new(self.lo, self.hi, d.into_iter().map(|v| v * scale).collect())
    }
}

pub(crate) fn apply(m: &DMatrix<f64>, f: &[Complex64]) -> Vec<Complex64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += f[j] * m[(i, j)];
            }
            acc
        })
        .collect()
}

/// Solve a real system against a complex right-hand side.
pub(crate) fn solve_complex(a: &DMatrix<f64>, rhs: &[Complex64]) -> Option<Vec<Complex64>> {
    let lu = a.clone().lu();
    let re = nalgebra::DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.re));
    let im = nalgebra::DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.im));
    let ur = lu.solve(&re)?;
    let ui = lu.solve(&im)?;
    Some(
        ur.iter()
            .zip(ui.iter())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect(),
    )
}

/// 2-norm condition number via singular values.
/// 2-norm condition number after scaling each row to unit max-norm.
///
/// Row scaling does not change the solution of `A u = b`, while collocation rows differ in size by
/// O(N^4) between the boundary rows and the interior, so the raw ratio overstates the sensitivity.
pub(crate) fn condition_number(a: &DMatrix<f64>) -> (f64, f64) {
    let mut a = a.clone();
    for mut row in a.row_iter_mut() {
        let s = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if s > 0.0 {
            row /= s;
        }
    }
    let sv = a.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (if min > 0.0 { max / min } else { f64::INFINITY }, min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn differentiates_power_laws() {
        let g = LogChebGrid::new(48, 1e-3).unwrap();
        let f: Vec<Complex64> = g.radii().iter().map(|&r| c(r.powf(2.7))).collect();
        let df = g.dr(&f);
        for (k, &r) in g.radii().iter().enumerate() {
            assert!((df[k].re - 2.7 * r.powf(1.7)).abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_harmonic_mode_vanishes() {
        let g = LogChebGrid::new(48, 1e-3).unwrap();
        let f: Vec<Complex64> = g.radii().iter().map(|&r| c(r.powi(3))).collect();
        let lap = g.laplacian(&f, 3);
        for (k, &r) in g.radii().iter().enumerate() {
            assert!(lap[k].norm() * r * r < 1e-10);
        }
    }

    #[test]
    fn interpolation_is_spectral() {
        let g = LogChebGrid::new(48, 1e-3).unwrap();
        let f: Vec<Complex64> = g.radii().iter().map(|&r| c(r.powf(1.3))).collect();
        for &r in &[0.0013, 0.05, 0.3777, 0.9999] {
            assert!((g.interpolate(&f, r).re - r.powf(1.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn cheb_series_fit_and_derivative() {
        let t: Vec<f64> = (0..200).map(|i| -3.0 + 3.0 * i as f64 / 199.0).collect();
        let y: Vec<f64> = t.iter().map(|&v| (0.7 * v).exp()).collect();
        let series = ChebSeries::fit(-3.0, 0.0, &t, &y, 30).unwrap();
        let d = series.derivative();
        let dd = d.derivative();
        for &v in &[-2.9, -1.0, -0.1] {
            assert!((series.eval(v) - (0.7 * v).exp()).abs() < 1e-13);
            assert!((d.eval(v) - 0.7 * (0.7 * v).exp()).abs() < 1e-11);
            assert!((dd.eval(v) - 0.49 * (0.7 * v).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn antiderivative_matches() {
        let g = LogChebGrid::new(40, 1e-2).unwrap();
        let f: Vec<Complex64> = g.log_radii().iter().map(|&x| c(x.cos())).collect();
        let x0 = g.log_radii()[g.n()];
        let big_f = g.integrate_x(&f, c(0.0));
        for (k, &x) in g.log_radii().iter().enumerate() {
            assert!((big_f[k].re - (x.sin() - x0.sin())).abs() < 1e-11);
        }
    }
}
