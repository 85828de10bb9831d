//! Fields on the disc stored as complex radial profiles per azimuthal mode,
//! `f(r, sigma) = sum_m f_m(r) e^{i m sigma}`, all sharing one radial grid.

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::spectral::SharedGrid;

#[derive(Debug, Clone)]
pub struct FourierRadialField {
    grid: SharedGrid,
    modes: BTreeMap<i32, Vec<Complex64>>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl FourierRadialField {
    pub fn zeros(grid: &SharedGrid) -> Self {
        Self {
            grid: grid.clone(),
            modes: BTreeMap::new(),
        }
    }

    pub fn single(grid: &SharedGrid, m: i32, profile: Vec<Complex64>) -> Self {
        let mut f = Self::zeros(grid);
        f.insert(m, profile);
        f
    }

    /// Mode-0 field from a real radial function.
    pub fn radial(grid: &SharedGrid, profile: impl Fn(f64) -> f64) -> Self {
        let values = grid.radii().iter().map(|&r| Complex64::new(profile(r), 0.0)).collect();
        Self::single(grid, 0, values)
    }

    pub fn from_fn(grid: &SharedGrid, m: i32, profile: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.radii().iter().map(|&r| profile(r)).collect();
        Self::single(grid, m, values)
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }

    pub fn insert(&mut self, m: i32, profile: Vec<Complex64>) {
        assert_eq!(profile.len(), self.grid.len(), "profile length must match the grid");
        self.modes.insert(m, profile);
    }

    pub fn mode(&self, m: i32) -> Option<&[Complex64]> {
        self.modes.get(&m).map(Vec::as_slice)
    }

    pub fn mode_or_zero(&self, m: i32) -> Vec<Complex64> {
        self.modes
            .get(&m)
            .cloned()
            .unwrap_or_else(|| vec![zero(); self.grid.len()])
    }

    pub fn modes(&self) -> impl Iterator<Item = (i32, &[Complex64])> {
        self.modes.iter().map(|(&m, v)| (m, v.as_slice()))
    }

    pub fn mode_indices(&self) -> Vec<i32> {
        self.modes.keys().copied().collect()
    }

    /// Modes whose profile exceeds `tol` somewhere.
    pub fn support(&self, tol: f64) -> Vec<i32> {
        self.modes
            .iter()
            .filter(|(_, v)| v.iter().any(|z| z.norm() > tol))
            .map(|(&m, _)| m)
            .collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.modes
            .values()
            .flat_map(|v| v.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "fields sampled on N={} r_min={:e} and N={} r_min={:e}",
                self.grid.n(),
                self.grid.r_min(),
                other.grid.n(),
                other.grid.r_min()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut out = self.clone();
        for (&m, v) in &other.modes {
            let entry = out.modes.entry(m).or_insert_with(|| vec![zero(); v.len()]);
            for (a, b) in entry.iter_mut().zip(v) {
                *a += b;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.modes.values_mut() {
            for z in v.iter_mut() {
                *z *= c;
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    fn map_modes(&self, f: impl Fn(i32, &[Complex64]) -> Vec<Complex64>) -> Self {
        Self {
            grid: self.grid.clone(),
            modes: self.modes.iter().map(|(&m, v)| (m, f(m, v))).collect(),
        }
    }

    pub fn dr(&self) -> Self {
        self.map_modes(|_, v| self.grid.dr(v))
    }

    pub fn dsigma(&self) -> Self {
        self.map_modes(|m, v| v.iter().map(|z| z * Complex64::new(0.0, f64::from(m))).collect())
    }

    pub fn laplacian(&self) -> Self {
        self.map_modes(|m, v| self.grid.laplacian(v, m))
    }

    /// The σ-average (mode 0), i.e. `1 - P0`.
    pub fn mean(&self) -> Self {
        let mut out = Self::zeros(&self.grid);
        if let Some(v) = self.modes.get(&0) {
            out.insert(0, v.clone());
        }
        out
    }

    /// `P0`: remove the σ-average.
    pub fn project_away_mean(&self) -> Self {
        let mut out = self.clone();
        out.modes.remove(&0);
        out
    }

    /// `max |f_{-m} - conj(f_m)|`; zero for the representation of a real field.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&m, v) in &self.modes {
            match self.modes.get(&-m) {
                Some(w) => {
                    for (a, b) in v.iter().zip(w) {
                        worst = worst.max((a - b.conj()).norm());
                    }
                }
                None => {
                    worst = worst.max(v.iter().map(|z| z.norm()).fold(0.0, f64::max));
                }
            }
        }
        worst
    }

    pub fn is_conjugate_symmetric(&self, tol: f64) -> bool {
        self.conjugate_symmetry_defect() <= tol
    }

    /// Point value `sum_m f_m(r) e^{i m sigma}` (complex; real for symmetric fields).
    pub fn eval(&self, r: f64, sigma: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|(&m, v)| self.grid.interpolate(v, r) * Complex64::from_polar(1.0, f64::from(m) * sigma))
            .sum()
    }
}

/// `[f, g] = (1/r)(f_r g_sigma - f_sigma g_r)`; modes `m` and `n` combine into `m + n`.
pub fn polar_bracket(f: &FourierRadialField, g: &FourierRadialField) -> Result<FourierRadialField> {
    f.check_grid(g)?;
    let grid = f.grid.clone();
    let r = grid.radii();
    let mut out = FourierRadialField::zeros(&grid);
    let fr: BTreeMap<i32, Vec<Complex64>> = f.modes.iter().map(|(&m, v)| (m, grid.dr(v))).collect();
    let gr: BTreeMap<i32, Vec<Complex64>> = g.modes.iter().map(|(&m, v)| (m, grid.dr(v))).collect();
    for (&m, fv) in &f.modes {
        for (&n, gv) in &g.modes {
            let im = Complex64::new(0.0, f64::from(m));
            let iin = Complex64::new(0.0, f64::from(n));
            let (fm_r, gn_r) = (&fr[&m], &gr[&n]);
            let term: Vec<Complex64> = (0..grid.len())
                .map(|k| (fm_r[k] * iin * gv[k] - im * fv[k] * gn_r[k]) / r[k])
                .collect();
            let entry = out
                .modes
                .entry(m + n)
                .or_insert_with(|| vec![zero(); grid.len()]);
            for (a, b) in entry.iter_mut().zip(term) {
                *a += b;
            }
        }
    }
    Ok(out)
}

/// `[f, sigma] = f_r / r` for the angle coordinate, which is not itself a Fourier field.
pub fn bracket_with_angle(f: &FourierRadialField) -> FourierRadialField {
    let r = f.grid.radii().to_vec();
    f.map_modes(|_, v| f.grid.dr(v).into_iter().zip(&r).map(|(z, &rr)| z / rr).collect())
}

/// A quadratic quantity `sum_{a <= b} L_a L_b q_{ab}(r) e^{i (a+b) sigma}` with one profile per unordered pair.
#[derive(Debug, Clone)]
pub struct BilinearField {
    grid: SharedGrid,
    pairs: BTreeMap<(i32, i32), Vec<Complex64>>,
}

impl BilinearField {
    pub fn new(grid: &SharedGrid) -> Self {
        Self {
            grid: grid.clone(),
            pairs: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }

    pub fn insert(&mut self, a: i32, b: i32, profile: Vec<Complex64>) {
        self.pairs.insert((a.min(b), a.max(b)), profile);
    }

    pub fn pair(&self, a: i32, b: i32) -> Option<&[Complex64]> {
        self.pairs.get(&(a.min(b), a.max(b))).map(Vec::as_slice)
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((i32, i32), &[Complex64])> {
        self.pairs.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    /// Contract with amplitudes `L_a`.
    pub fn assemble(&self, lambda: impl Fn(i32) -> Complex64) -> FourierRadialField {
        let mut out = FourierRadialField::zeros(&self.grid);
        for (&(a, b), v) in &self.pairs {
            let c = lambda(a) * lambda(b);
            let single = FourierRadialField::single(&self.grid, a + b, v.clone()).scale(c);
            out = out.add(&single).expect("same grid");
        }
        out
    }

    /// `max |q_{-b,-a} - conj(q_{ab})|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (&(a, b), v) in &self.pairs {
            let partner = self.pair(-b, -a);
            match partner {
                Some(w) => {
                    for (x, y) in v.iter().zip(w) {
                        worst = worst.max((x - y.conj()).norm());
                    }
                }
                None => worst = worst.max(v.iter().map(|z| z.norm()).fold(0.0, f64::max)),
            }
        }
        worst
    }

    pub fn max_norm(&self) -> f64 {
        self.pairs
            .values()
            .flat_map(|v| v.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::LogChebGrid;

    fn grid() -> SharedGrid {
        LogChebGrid::shared(48, 1e-2).unwrap()
    }

    #[test]
    fn canonical_pair_bracket() {
        let g = grid();
        let f = FourierRadialField::radial(&g, |r| 0.5 * r * r);
        let b = bracket_with_angle(&f);
        for z in b.mode(0).unwrap() {
            assert!((z - 1.0).norm() < 1e-11);
        }
    }

    #[test]
    fn self_bracket_vanishes() {
        let g = grid();
        let f = FourierRadialField::from_fn(&g, 2, |r| Complex64::new(r.powf(2.5), 0.3 * r))
            .add(&FourierRadialField::from_fn(&g, -3, |r| Complex64::new(0.0, r.powi(3))))
            .unwrap();
        let b = polar_bracket(&f, &f).unwrap();
        assert!(b.max_norm() < 1e-10);
    }

    #[test]
    fn monomial_bracket_rule() {
        // [r^p e^{i m s}, r^q e^{i n s}] = i (n p - m q) r^{p+q-2} e^{i (m+n) s}
        let g = grid();
        let (p, q, m, n) = (2.5, 3.0, 2, -5);
        let f = FourierRadialField::from_fn(&g, m, |r| Complex64::new(r.powf(p), 0.0));
        let h = FourierRadialField::from_fn(&g, n, |r| Complex64::new(r.powf(q), 0.0));
        let b = polar_bracket(&f, &h).unwrap();
        assert_eq!(b.mode_indices(), vec![m + n]);
        let coeff = Complex64::new(0.0, f64::from(n) * p - f64::from(m) * q);
        for (k, &r) in g.radii().iter().enumerate() {
            let exact = coeff * r.powf(p + q - 2.0);
            assert!((b.mode(m + n).unwrap()[k] - exact).norm() < 1e-10 * (1.0 + exact.norm()));
        }
    }

    #[test]
    fn projection() {
        let g = grid();
        let f0 = FourierRadialField::radial(&g, |r| r);
        assert_eq!(f0.project_away_mean().max_norm(), 0.0);
        let f2 = FourierRadialField::from_fn(&g, 2, |r| Complex64::new(r, r));
        let p = f2.project_away_mean();
        assert_eq!(p.mode(2), f2.mode(2));
        let both = f0.add(&f2).unwrap();
        let once = both.project_away_mean();
        let twice = once.project_away_mean();
        assert_eq!(once.mode_indices(), twice.mode_indices());
        assert_eq!(once.mode(2), twice.mode(2));
    }

    #[test]
    fn grid_mismatch_detected() {
        let a = FourierRadialField::radial(&grid(), |r| r);
        let b = FourierRadialField::radial(&LogChebGrid::shared(32, 1e-2).unwrap(), |r| r);
        assert!(matches!(polar_bracket(&a, &b), Err(Error::GridMismatch(_))));
    }
}
