//! Small-deformation expansion of the rearranged steady flow and of its
//! first-order Eulerian correction, mode by mode.
//!
//! Every quantity is computed for unit amplitudes and assembled later:
//! `rho1 = sum_m L_m rho_{1,m}(r) e^{i m sigma}`,
//! `Psi1bar_1 = sum_m Psi_{1,m}(r) e^{i m sigma} dL_m`,
//! `chi2 = sum_{m>0} |L_m|² chi_{2,m}(r)`,
//! `rho2 = sum_{a<=b} L_a L_b rho_{2,ab}(r) e^{i(a+b) sigma}`,
//! `<Psi1bar_2> = sum_a Y_a(r) L_a dL_a*`.

pub mod closed_form;
pub mod field;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::baseflow::BaseFlow;
use crate::error::{Error, Result};
use crate::radial_bvp::{ConditioningReport, RadialOperator};
use crate::spectral::{LogChebGrid, SharedGrid};

pub use closed_form::ModeConstants;
pub use field::{bracket_with_angle, polar_bracket, BilinearField, FourierRadialField};

/// Relative tolerance of the mode-0 solvability check of the second-order problem.
///
/// The check differentiates `chi2'` on the grid, so for steep flows (small exponents) its round-off
/// grows with the resolution, reaching ~1e-4 at N = 96. Under-resolution shows up at 1e-2 and above.
pub const SOLVABILITY_TOLERANCE: f64 = 1e-3;
/// Radii below this are excluded from the solvability check.
const SOLVABILITY_R_MIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialNumerics {
    pub n_radial: usize,
    pub r_min: f64,
}

impl Default for RadialNumerics {
    fn default() -> Self {
        Self {
            n_radial: 64,
            r_min: 1e-3,
        }
    }
}

impl RadialNumerics {
    pub fn grid(&self) -> Result<SharedGrid> {
        LogChebGrid::shared(self.n_radial, self.r_min)
    }
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn ci(v: f64) -> Complex64 {
    Complex64::new(0.0, v)
}

/// `psi0' (u'' - u'/r + (2 - m²) u / r²) + 2 psi0'' (u' - u/r)`.
pub fn rho_operator(flow: &BaseFlow, m: i32) -> RadialOperator {
    let m2 = f64::from(m * m);
    let (f1, f2, f3) = (flow.clone(), flow.clone(), flow.clone());
    let s0 = flow.stretch(0.0);
    RadialOperator::normalized(
        "rho",
        m,
        move |r| -1.0 + 2.0 * f1.stretch(r),
        move |r| 2.0 - m2 - 2.0 * f2.stretch(r),
        move |r| r * r / f3.dpsi0(r),
    )
    .with_origin(-1.0 + 2.0 * s0, 2.0 - m2 - 2.0 * s0)
}

/// `psi0' [(1/r)(r u')' - m² u / r²] - omega0' u`.
pub fn psi1_operator(flow: &BaseFlow, m: i32) -> RadialOperator {
    let m2 = f64::from(m * m);
    let (f1, f2, f3) = (flow.clone(), flow.clone(), flow.clone());
    RadialOperator::normalized(
        "psi1bar",
        m,
        |_| 1.0,
        move |r| -m2 - f1.vorticity_ratio(r),
        move |r| r * r / f2.dpsi0(r),
    )
    .with_origin(1.0, -m2 - flow.vorticity_ratio(0.0))
    .with_vorticity_ratio(move |r| f3.vorticity_ratio(r))
}

/// Signed mode set `{±m}` for positive `modes`, ordered.
pub fn signed_modes(modes: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = modes.iter().flat_map(|&m| [-m.abs(), m.abs()]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn positive_modes(modes: &[i32]) -> Result<Vec<i32>> {
    let mut out: Vec<i32> = modes.iter().map(|m| m.abs()).collect();
    if out.contains(&0) {
        return Err(Error::Deformation("mode 0 is gauge-fixed and cannot be driven".into()));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Unit-amplitude `rho_{1,m}` for every `m` and its conjugate partner. Mode 0 is absent (gauge).
pub fn solve_rho1(
    flow: &BaseFlow,
    grid: &SharedGrid,
    modes: &[i32],
) -> Result<(FourierRadialField, Vec<ConditioningReport>)> {
    let modes = positive_modes(modes)?;
    let zero = vec![c0(); grid.len()];
    let solved: Vec<(i32, Vec<Complex64>, ConditioningReport)> = modes
        .par_iter()
        .map(|&m| {
            let op = rho_operator(flow, m);
            let report = op.conditioning_report(grid);
            let sol = op.solve(grid, &zero, ci(1.0 / f64::from(m)))?;
            Ok((m, sol.values, report))
        })
        .collect::<Result<_>>()?;
    let mut field = FourierRadialField::zeros(grid);
    let mut reports = Vec::new();
    for (m, values, report) in solved {
        field.insert(-m, values.iter().map(|z| z.conj()).collect());
        field.insert(m, values);
        reports.push(report);
    }
    Ok((field, reports))
}

/// Unit-`dL_m` profiles of the first-order correction; no mode 0.
pub fn solve_psi1bar_1(
    flow: &BaseFlow,
    rho1: &FourierRadialField,
) -> Result<(FourierRadialField, Vec<ConditioningReport>)> {
    let grid = rho1.grid().clone();
    let modes: Vec<i32> = rho1.mode_indices().into_iter().filter(|&m| m > 0).collect();
    let solved: Vec<(i32, Vec<Complex64>, ConditioningReport)> = modes
        .par_iter()
        .map(|&m| {
            let op = psi1_operator(flow, m);
            let report = op.conditioning_report(&grid);
            let rho = rho1.mode(m).expect("mode present");
            let rhs: Vec<Complex64> = grid
                .radii()
                .iter()
                .zip(rho)
                .map(|(&r, &z)| -z * flow.domega0(r))
                .collect();
            let sol = op.solve(&grid, &rhs, ci(1.0 / f64::from(m)))?;
            Ok((m, sol.values, report))
        })
        .collect::<Result<_>>()?;
    let mut field = FourierRadialField::zeros(&grid);
    let mut reports = Vec::new();
    for (m, values, report) in solved {
        field.insert(-m, values.iter().map(|z| z.conj()).collect());
        field.insert(m, values);
        reports.push(report);
    }
    Ok((field, reports))
}

/// Circle average of `(rho_{r sigma})² + (rho_{sigma sigma})²/r² - (2/r) rho_sigma rho_{r sigma}`
/// per `|L_m|²`.
fn averaged_strain(grid: &SharedGrid, rho1: &FourierRadialField, m: i32) -> Vec<f64> {
    let r = grid.radii();
    let mf = f64::from(m);
    let mut out = vec![0.0; grid.len()];
    for (a, b) in [(m, -m), (-m, m)] {
        let (ra, rb) = (rho1.mode_or_zero(a), rho1.mode_or_zero(b));
        let (da, db) = (grid.dr(&ra), grid.dr(&rb));
        for k in 0..grid.len() {
            let term = da[k] * db[k] * mf * mf + ra[k] * rb[k] * mf.powi(4) / (r[k] * r[k])
                - ra[k] * db[k] * (2.0 * mf * mf / r[k]);
            out[k] += term.re;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Chi2Profiles {
    /// `chi_{2,m}` with `chi_{2,m}(1) = 0`.
    pub values: BTreeMap<i32, Vec<f64>>,
    pub derivative: BTreeMap<i32, Vec<f64>>,
}

/// Solvability condition of the second-order problem, integrated with bounded `chi2'` and `chi2(1) = 0`.
pub fn solve_chi2(flow: &BaseFlow, rho1: &FourierRadialField) -> Chi2Profiles {
    let grid = rho1.grid().clone();
    let r = grid.radii();
    let mut values = BTreeMap::new();
    let mut derivative = BTreeMap::new();
    for m in rho1.mode_indices().into_iter().filter(|&m| m > 0) {
        let q = averaged_strain(&grid, rho1, m);
        let d: Vec<f64> = (0..grid.len())
            .map(|k| -flow.dpsi0(r[k]) * q[k] / (r[k] * r[k]))
            .collect();
        let dx: Vec<Complex64> = d.iter().zip(r).map(|(&v, &rr)| Complex64::new(v * rr, 0.0)).collect();
        let anti = grid.integrate_x(&dx, c0());
        let top = anti[0];
        values.insert(m, anti.iter().map(|z| (z - top).re).collect());
        derivative.insert(m, d);
    }
    Chi2Profiles { values, derivative }
}

/// `2[A, Δ[B, psi0]] - [A, [B, Δpsi0]] - Δ[A, [B, psi0]]`.
fn second_order_source(
    a: &FourierRadialField,
    b: &FourierRadialField,
    psi0: &FourierRadialField,
    omega0: &FourierRadialField,
) -> Result<FourierRadialField> {
    let b_psi = polar_bracket(b, psi0)?;
    let t1 = polar_bracket(a, &b_psi.laplacian())?.scale(Complex64::new(2.0, 0.0));
    let t2 = polar_bracket(a, &polar_bracket(b, omega0)?)?;
    let t3 = polar_bracket(a, &b_psi)?.laplacian();
    t1.sub(&t2)?.sub(&t3)
}

#[derive(Debug, Clone)]
pub struct Rho2Solution {
    pub rho2: BilinearField,
    /// Source of the second-order problem, all pairs including `a + b = 0`.
    pub source: BilinearField,
    /// Worst relative mismatch between the mode-0 source and `(2/r)(r chi2')'`.
    pub solvability_residual: f64,
    pub reports: Vec<ConditioningReport>,
}

pub fn solve_rho2(flow: &BaseFlow, rho1: &FourierRadialField, chi2: &Chi2Profiles) -> Result<Rho2Solution> {
    let grid = rho1.grid().clone();
    let r = grid.radii().to_vec();
    let psi0 = FourierRadialField::radial(&grid, |rr| flow.psi0(rr));
    let omega0 = FourierRadialField::radial(&grid, |rr| flow.omega0(rr));
    let signed: Vec<i32> = rho1.mode_indices();
    let unit = |m: i32| FourierRadialField::single(&grid, m, rho1.mode_or_zero(m));

    let mut pairs = Vec::new();
    for (i, &a) in signed.iter().enumerate() {
        for &b in &signed[i..] {
            pairs.push((a, b));
        }
    }
    let sources: Vec<((i32, i32), Vec<Complex64>)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (fa, fb) = (unit(a), unit(b));
            let mut s = second_order_source(&fa, &fb, &psi0, &omega0)?;
            if a != b {
                s = s.add(&second_order_source(&fb, &fa, &psi0, &omega0)?)?;
            }
            Ok(((a, b), s.mode_or_zero(a + b)))
        })
        .collect::<Result<_>>()?;
    let mut source = BilinearField::new(&grid);
    for ((a, b), v) in &sources {
        source.insert(*a, *b, v.clone());
    }

    let mut residual: f64 = 0.0;
    for (&m, d) in &chi2.derivative {
        let Some(s0) = source.pair(-m, m) else { continue };
        let r_chi: Vec<Complex64> = d.iter().zip(&r).map(|(&v, &rr)| Complex64::new(v * rr, 0.0)).collect();
        let lhs = grid.dx(&r_chi);
        let scale = s0
            .iter()
            .zip(&r)
            .filter(|(_, &rr)| rr >= SOLVABILITY_R_MIN)
            .map(|(z, _)| z.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        for k in 0..grid.len() {
            if r[k] >= SOLVABILITY_R_MIN {
                let mismatch = (lhs[k] * (2.0 / (r[k] * r[k])) - s0[k]).norm();
                residual = residual.max(mismatch / scale);
            }
        }
    }
    if residual > SOLVABILITY_TOLERANCE {
        return Err(Error::Consistency(format!(
            "mode-0 source and chi2 disagree (relative residual {residual:.3e})"
        )));
    }

    let drho: BTreeMap<i32, Vec<Complex64>> = signed
        .iter()
        .map(|&m| (m, grid.dr(&rho1.mode_or_zero(m))))
        .collect();
    let solved: Vec<((i32, i32), Vec<Complex64>, ConditioningReport)> = sources
        .par_iter()
        .filter(|((a, b), _)| a + b != 0)
        .map(|&((a, b), ref s)| {
            let k = a + b;
            let kf = f64::from(k);
            let (ra, rb) = (rho1.mode_or_zero(a)[0], rho1.mode_or_zero(b)[0]);
            let (da, db) = (drho[&a][0], drho[&b][0]);
            let (af, bf) = (f64::from(a), f64::from(b));
            let (r_sigma, sigma_sq) = if a == b {
                (da * ci(bf) * rb, ci(af) * ra * ci(bf) * rb)
            } else {
                (
                    da * ci(bf) * rb + db * ci(af) * ra,
                    ci(af) * ra * ci(bf) * rb * 2.0,
                )
            };
            let bc = (ci(kf) * r_sigma - sigma_sq) / ci(kf);
            let rhs: Vec<Complex64> = s.iter().zip(&r).map(|(&z, &rr)| z * rr / ci(kf)).collect();
            let op = rho_operator(flow, k);
            let report = op.conditioning_report(&grid);
            let sol = op.solve(&grid, &rhs, bc)?;
            Ok(((a, b), sol.values, report))
        })
        .collect::<Result<_>>()?;
    let mut rho2 = BilinearField::new(&grid);
    let mut reports = Vec::new();
    for ((a, b), v, report) in solved {
        rho2.insert(a, b, v);
        reports.push(report);
    }
    Ok(Rho2Solution {
        rho2,
        source,
        solvability_residual: residual,
        reports,
    })
}

/// Solve `u_xx = h` for a mode-0 profile regular at the origin with `u(0) = 0`,
/// closing at the cut-off with the local power law `h ~ r^lambda`.
fn integrate_regular(grid: &SharedGrid, h: &[Complex64]) -> Vec<Complex64> {
    let n = grid.n();
    let start = |f: &[Complex64]| -> Complex64 {
        let f0 = f[n];
        if f0.norm() == 0.0 {
            return c0();
        }
        let lambda = (grid.dx(f)[n] / f0).re;
        if lambda > 1e-8 {
            f0 / lambda
        } else {
            c0()
        }
    };
    let w = grid.integrate_x(h, start(h));
    grid.integrate_x(&w, start(&w))
}

/// Circle-averaged second-order correction, per signed mode `a` (coefficient of `L_a dL_a*`):
/// `(1/r)(r Y')' = <Δ[rho_a, Psi_{-a}] - [rho_a, ΔPsi_{-a}]>` with `Y(0) = 0`.
pub fn solve_psi1bar_2_avg(
    flow: &BaseFlow,
    rho1: &FourierRadialField,
    psi1bar_1: &FourierRadialField,
) -> Result<BTreeMap<i32, Vec<Complex64>>> {
    let grid = rho1.grid().clone();
    let r = grid.radii().to_vec();
    let mut out = BTreeMap::new();
    for a in rho1.mode_indices() {
        let fa = FourierRadialField::single(&grid, a, rho1.mode_or_zero(a));
        let psi = psi1bar_1.mode_or_zero(-a);
        let rho_partner = rho1.mode_or_zero(-a);
        let fp = FourierRadialField::single(&grid, -a, psi.clone());
        // Δ Psi_{-a} = F' (Psi_{-a} - rho_{-a}) holds exactly for the solved profile.
        let lap: Vec<Complex64> = (0..grid.len())
            .map(|k| (psi[k] - rho_partner[k]) * (flow.vorticity_ratio(r[k]) / (r[k] * r[k])))
            .collect();
        let flap = FourierRadialField::single(&grid, -a, lap);
        let direct = polar_bracket(&fa, &fp)?.mode_or_zero(0);
        let rest = polar_bracket(&fa, &flap)?.mode_or_zero(0);
        let h: Vec<Complex64> = rest.iter().zip(&r).map(|(&z, &rr)| -z * rr * rr).collect();
        let z = integrate_regular(&grid, &h);
        out.insert(a, direct.iter().zip(&z).map(|(x, y)| x + y).collect());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PerturbationSolution {
    pub grid: SharedGrid,
    /// Positive driven modes.
    pub modes: Vec<i32>,
    pub rho1: FourierRadialField,
    pub psi1bar_1: FourierRadialField,
    /// Always zero for axisymmetric base flows.
    pub chi1: f64,
    pub chi2: Chi2Profiles,
    pub rho2: Option<Rho2Solution>,
    pub psi1bar_2_avg: BTreeMap<i32, Vec<Complex64>>,
    pub reports: Vec<ConditioningReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecondOrder {
    /// Also solve for `rho2` (with the solvability check).
    Full,
    /// Only what the geometric angle needs.
    AveragedOnly,
}

impl PerturbationSolution {
    pub fn solve(flow: &BaseFlow, numerics: RadialNumerics, modes: &[i32], second: SecondOrder) -> Result<Self> {
        let grid = numerics.grid()?;
        Self::solve_on(flow, &grid, modes, second)
    }

    pub fn solve_on(flow: &BaseFlow, grid: &SharedGrid, modes: &[i32], second: SecondOrder) -> Result<Self> {
        let positive = positive_modes(modes)?;
        let (rho1, mut reports) = solve_rho1(flow, grid, &positive)?;
        let (psi1bar_1, r2) = solve_psi1bar_1(flow, &rho1)?;
        reports.extend(r2);
        let chi2 = solve_chi2(flow, &rho1);
        let rho2 = match second {
            SecondOrder::Full => {
                let sol = solve_rho2(flow, &rho1, &chi2)?;
                reports.extend(sol.reports.iter().cloned());
                Some(sol)
            }
            SecondOrder::AveragedOnly => None,
        };
        let psi1bar_2_avg = solve_psi1bar_2_avg(flow, &rho1, &psi1bar_1)?;
        Ok(Self {
            grid: grid.clone(),
            modes: positive,
            rho1,
            psi1bar_1,
            chi1: 0.0,
            chi2,
            rho2,
            psi1bar_2_avg,
            reports,
        })
    }

    pub fn y(&self, a: i32) -> Option<&[Complex64]> {
        self.psi1bar_2_avg.get(&a).map(Vec::as_slice)
    }

    /// `rho1` for given amplitudes.
    pub fn rho1_for(&self, lambda: impl Fn(i32) -> Complex64) -> FourierRadialField {
        let mut out = FourierRadialField::zeros(&self.grid);
        for (m, v) in self.rho1.modes() {
            let scaled: Vec<Complex64> = v.iter().map(|z| z * lambda(m)).collect();
            out.insert(m, scaled);
        }
        out
    }

    /// `chi2` for given amplitudes.
    pub fn chi2_for(&self, lambda: impl Fn(i32) -> Complex64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (&m, v) in &self.chi2.values {
            let w = lambda(m).norm_sqr();
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SharedGrid {
        RadialNumerics::default().grid().unwrap()
    }

    #[test]
    fn rho1_matches_closed_form() {
        let flow = BaseFlow::power_law(1.0, 0.5).unwrap();
        let g = grid();
        let (rho1, _) = solve_rho1(&flow, &g, &[2, 3, 4, 5, 6]).unwrap();
        for m in 2..=6 {
            let c = ModeConstants::new(0.5, m);
            for (k, &r) in g.radii().iter().enumerate() {
                let err = (rho1.mode(m).unwrap()[k] - c.rho1(m, r)).norm();
                assert!(err < 1e-8, "m={m} r={r} err={err:e}");
            }
        }
        assert!(rho1.mode(0).is_none());
    }

    #[test]
    fn translation_mode_is_linear() {
        let flow = BaseFlow::power_law(1.0, 0.5).unwrap();
        let g = grid();
        let (rho1, _) = solve_rho1(&flow, &g, &[1]).unwrap();
        for (k, &r) in g.radii().iter().enumerate() {
            let err = (rho1.mode(1).unwrap()[k] - ci(r)).norm();
            assert!(err < 1e-9, "r={r} err={err:e}");
        }
    }

    #[test]
    fn psi1bar_matches_closed_form() {
        let flow = BaseFlow::power_law(1.0, 0.5).unwrap();
        let g = grid();
        let (rho1, _) = solve_rho1(&flow, &g, &[2, 3, 4, 5, 6]).unwrap();
        let (psi, _) = solve_psi1bar_1(&flow, &rho1).unwrap();
        for m in 2..=6 {
            let c = ModeConstants::new(0.5, m);
            for (k, &r) in g.radii().iter().enumerate() {
                let err = (psi.mode(m).unwrap()[k] - c.psi1bar_1(m, r)).norm();
                assert!(err < 1e-8, "m={m} r={r} err={err:e}");
            }
        }
    }

    #[test]
    fn averaged_second_order_matches_closed_form() {
        let flow = BaseFlow::power_law(1.0, 0.5).unwrap();
        let sol = PerturbationSolution::solve(&flow, RadialNumerics::default(), &[2, 3], SecondOrder::AveragedOnly)
            .unwrap();
        for m in [2, 3] {
            let c = ModeConstants::new(0.5, m);
            for s in [m, -m] {
                let y = sol.y(s).unwrap();
                for (k, &r) in sol.grid.radii().iter().enumerate() {
                    let err = (y[k] - c.psi1bar_2_avg(s, r)).norm();
                    assert!(err < 1e-7, "m={s} r={r} err={err:e}");
                }
            }
        }
    }

    #[test]
    fn second_order_solves_consistently() {
        let flow = BaseFlow::power_law(1.0, 0.5).unwrap();
        let sol = PerturbationSolution::solve(&flow, RadialNumerics::default(), &[2], SecondOrder::Full).unwrap();
        let rho2 = sol.rho2.as_ref().unwrap();
        assert!(rho2.solvability_residual < SOLVABILITY_TOLERANCE);
        let keys: Vec<(i32, i32)> = rho2.rho2.pairs().map(|(k, _)| k).collect();
        assert_eq!(keys, vec![(-2, -2), (2, 2)]);
        assert!(rho2.rho2.conjugate_symmetry_defect() < 1e-10);
    }

    // Both origin exponents of the |m| = 1 displacement problem are admissible for alpha < 1.
    #[test]
    fn mixed_mode_one_component_converges() {
        let flow = BaseFlow::power_law(1.0, 0.2).unwrap();
        let sample = |n_radial: usize, r_min: f64| {
            let sol = PerturbationSolution::solve(&flow, RadialNumerics { n_radial, r_min }, &[2, 3], SecondOrder::Full)
                .unwrap();
            let v = sol.rho2.as_ref().unwrap().rho2.pair(-3, 2).unwrap().to_vec();
            [0.2, 0.5, 0.9].map(|r| sol.grid.interpolate(&v, r))
        };
        let base = sample(64, 1e-3);
        for other in [sample(96, 1e-3), sample(64, 3e-3)] {
            for (a, b) in base.iter().zip(&other) {
                assert!((a - b).norm() < 1e-3 * b.norm(), "{a} vs {b}");
            }
        }
    }
}
