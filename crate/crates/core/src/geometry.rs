//! Curvature of the natural connection and the geometric angle.
//!
//! All curvature profiles are coefficients of `dL_m ∧ dL_m*` (without the
//! `delta²` prefactor). With `∫ dL_m ∧ dL_m* = 2i area_m` and `d/dI = (1/r) d/dr`,
//! the geometric angle of a particle on the circle of radius `r` is
//! `delta² sum_{m>0} f_m(r) area_m` where `f_m = 2i (1/r) d kappa_m / dr`.

use num_complex::Complex64;
use serde::Serialize;

use crate::baseflow::BaseFlow;
use crate::deformation::DeformationPath;
use crate::error::{Error, Result};
use crate::perturbation::{polar_bracket, FourierRadialField, ModeConstants, PerturbationSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureProfile {
    pub m: i32,
    pub radii: Vec<f64>,
    pub d_phi_star: Vec<Complex64>,
    pub bracket: Vec<Complex64>,
    pub kappa: Vec<Complex64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct FmProfile {
    pub m: i32,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub constants: Option<ModeConstants>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeContribution {
    pub m: i32,
    pub area: f64,
    pub f_m: f64,
    pub contribution: f64,
    pub constants: Option<ModeConstants>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometricAngleResult {
    pub r: f64,
    pub delta: f64,
    pub modes: Vec<ModeContribution>,
    pub predicted: f64,
    pub truncation: &'static str,
    pub provenance: Provenance,
}

fn power_law_alpha(flow: &BaseFlow) -> Result<f64> {
    flow.power_law_params()
        .map(|p| p.alpha)
        .ok_or_else(|| Error::BaseFlow("closed forms require a power-law base flow".into()))
}

/// Closed-form curvature components for `psi0 = A r^alpha`. Independent of `A`.
pub fn curvature_closed_form(flow: &BaseFlow, m: i32, radii: &[f64]) -> Result<CurvatureProfile> {
    let c = ModeConstants::new(power_law_alpha(flow)?, m);
    Ok(CurvatureProfile {
        m: c.m,
        radii: radii.to_vec(),
        d_phi_star: radii.iter().map(|&r| c.d_phi_star(r)).collect(),
        bracket: radii.iter().map(|&r| c.bracket(r)).collect(),
        kappa: radii.iter().map(|&r| c.kappa(r)).collect(),
        provenance: Provenance::ClosedForm,
    })
}

pub fn f_m_profile(flow: &BaseFlow, m: i32, radii: &[f64]) -> Result<FmProfile> {
    let c = ModeConstants::new(power_law_alpha(flow)?, m);
    Ok(FmProfile {
        m: c.m,
        radii: radii.to_vec(),
        values: radii.iter().map(|&r| c.f_m(r)).collect(),
        constants: Some(c),
        provenance: Provenance::ClosedForm,
    })
}

/// Curvature from the solved perturbation profiles, on the solution grid.
pub fn curvature_numeric(solution: &PerturbationSolution, m: i32) -> Result<CurvatureProfile> {
    let m = m.abs();
    let grid = &solution.grid;
    let (y_plus, y_minus) = match (solution.y(m), solution.y(-m)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Deformation(format!("mode {m} was not solved"))),
    };
    let d_phi_star: Vec<Complex64> = y_plus.iter().zip(y_minus).map(|(a, b)| a - b).collect();
    let rho_p = FourierRadialField::single(grid, m, solution.rho1.mode_or_zero(m));
    let rho_m = FourierRadialField::single(grid, -m, solution.rho1.mode_or_zero(-m));
    let bracket: Vec<Complex64> = polar_bracket(&rho_p, &rho_m)?
        .mode_or_zero(0)
        .into_iter()
        .map(|z| z * 2.0)
        .collect();
    let kappa = d_phi_star
        .iter()
        .zip(&bracket)
        .map(|(d, b)| d - b * 0.5)
        .collect();
    Ok(CurvatureProfile {
        m,
        radii: grid.radii().to_vec(),
        d_phi_star,
        bracket,
        kappa,
        provenance: Provenance::Numeric,
    })
}

pub fn f_m_numeric(solution: &PerturbationSolution, m: i32) -> Result<FmProfile> {
    let curvature = curvature_numeric(solution, m)?;
    let grid = &solution.grid;
    let kx = grid.dx(&curvature.kappa);
    let values = kx
        .iter()
        .zip(grid.radii())
        .map(|(z, &r)| (Complex64::new(0.0, 2.0) * z / (r * r)).re)
        .collect();
    Ok(FmProfile {
        m: curvature.m,
        radii: grid.radii().to_vec(),
        values,
        constants: None,
        provenance: Provenance::Numeric,
    })
}

/// The circle average of `[Phi1 ∧ Phi1]` assembled from all driven modes at once, minus the
/// sum of the conjugate-pair contributions. Vanishes when cross-mode products average out.
pub fn cross_mode_average_defect(solution: &PerturbationSolution) -> Result<f64> {
    let grid = &solution.grid;
    let full = &solution.rho1;
    let total = polar_bracket(full, full)?;
    let mut pair_sum = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (a, va) in full.modes() {
        let fa = FourierRadialField::single(grid, a, va.to_vec());
        let fb = FourierRadialField::single(grid, -a, full.mode_or_zero(-a));
        for (s, z) in pair_sum.iter_mut().zip(polar_bracket(&fa, &fb)?.mode_or_zero(0)) {
            *s += z;
        }
    }
    Ok(total
        .mode_or_zero(0)
        .iter()
        .zip(&pair_sum)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

fn assemble(
    path: &DeformationPath,
    r: f64,
    mut f_of: impl FnMut(i32) -> Result<(f64, Option<ModeConstants>)>,
    provenance: Provenance,
) -> Result<GeometricAngleResult> {
    path.ensure_closed()?;
    let delta = path.delta();
    let mut modes = Vec::new();
    let mut predicted = 0.0;
    for m in path.active_modes() {
        let area = path.loop_area(m)?.area;
        let (f, constants) = f_of(m)?;
        let contribution = delta * delta * f * area;
        predicted += contribution;
        modes.push(ModeContribution {
            m,
            area,
            f_m: f,
            contribution,
            constants,
        });
    }
    Ok(GeometricAngleResult {
        r,
        delta,
        modes,
        predicted,
        truncation: "O(delta^3)",
        provenance,
    })
}

/// Predicted geometric angle on the circle of radius `r` from the closed forms.
pub fn geometric_angle(flow: &BaseFlow, path: &DeformationPath, r: f64) -> Result<GeometricAngleResult> {
    let alpha = power_law_alpha(flow)?;
    assemble(
        path,
        r,
        |m| {
            let c = ModeConstants::new(alpha, m);
            Ok((c.f_m(r), Some(c)))
        },
        Provenance::ClosedForm,
    )
}

/// Predicted geometric angle from numerically assembled `f_m` (any base flow).
pub fn geometric_angle_numeric(
    solution: &PerturbationSolution,
    path: &DeformationPath,
    r: f64,
) -> Result<GeometricAngleResult> {
    assemble(
        path,
        r,
        |m| {
            let profile = f_m_numeric(solution, m)?;
            let values: Vec<Complex64> = profile.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            Ok((solution.grid.interpolate(&values, r).re, None))
        },
        Provenance::Numeric,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::{RadialNumerics, SecondOrder};
    use std::f64::consts::PI;

    #[test]
    fn uniform_vorticity_profile() {
        let flow = BaseFlow::power_law(1.0, 2.0).unwrap();
        let radii = [0.01, 0.3, 1.0];
        let f = f_m_profile(&flow, 2, &radii).unwrap();
        for v in f.values {
            assert!((v - 8.0).abs() < 1e-12);
        }
        let k = curvature_closed_form(&flow, 2, &radii).unwrap();
        for (i, &r) in radii.iter().enumerate() {
            assert!((k.bracket[i] - Complex64::new(0.0, -4.0 * r * r)).norm() < 1e-14);
            assert!((k.kappa[i] - Complex64::new(0.0, -2.0 * r * r)).norm() < 1e-14);
        }
    }

    #[test]
    fn rotating_ellipse_angle() {
        let flow = BaseFlow::power_law(1.0, 2.0).unwrap();
        let path = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, 2.0, 0.0)
            .unwrap();
        let res = geometric_angle(&flow, &path, 0.5).unwrap();
        assert!((res.predicted - 16.0 * PI * 0.05f64.powi(2)).abs() < 1e-12);
        let reversed = DeformationPath::new(0.05, 0.01, 1.0)
            .unwrap()
            .with_circle(2, 1.0, -2.0, 0.0)
            .unwrap();
        let back = geometric_angle(&flow, &reversed, 0.5).unwrap();
        assert!((back.predicted + res.predicted).abs() < 1e-12);
    }

    #[test]
    fn undeformed_gives_zero() {
        let flow = BaseFlow::power_law(1.0, 0.5).unwrap();
        let path = DeformationPath::new(0.05, 0.01, 1.0).unwrap();
        assert_eq!(geometric_angle(&flow, &path, 0.5).unwrap().predicted, 0.0);
    }

    #[test]
    fn numeric_f_m_matches_closed_form() {
        let flow = BaseFlow::power_law(1.0, 0.5).unwrap();
        let sol = PerturbationSolution::solve(&flow, RadialNumerics::default(), &[2, 3], SecondOrder::AveragedOnly)
            .unwrap();
        for m in [2, 3] {
            let num = f_m_numeric(&sol, m).unwrap();
            let c = ModeConstants::new(0.5, m);
            for (r, v) in num.radii.iter().zip(&num.values) {
                if *r >= 0.05 {
                    assert!((v - c.f_m(*r)).abs() < 1e-6, "m={m} r={r}");
                }
            }
        }
        assert!(cross_mode_average_defect(&sol).unwrap() < 1e-10);
    }
}
