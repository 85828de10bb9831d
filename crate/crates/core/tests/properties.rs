use disc_holonomy::baseflow::BaseFlow;
use disc_holonomy::deformation::{DeformationPath, Pacing};
use disc_holonomy::geometry::geometric_angle;
use disc_holonomy::perturbation::{PerturbationSolution, RadialNumerics, SecondOrder};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn solve(alpha: f64, modes: &[i32], second: SecondOrder) -> PerturbationSolution {
    let flow = BaseFlow::power_law(1.0, alpha).unwrap();
    let numerics = RadialNumerics::default();
    PerturbationSolution::solve(&flow, numerics, modes, second).unwrap()
}

fn two_mode_path(r2: f64, t2: f64, p2: f64, r3: f64, t3: f64, p3: f64) -> DeformationPath {
    DeformationPath::new(0.03, 0.01, 1.0)
        .unwrap()
        .with_circle(2, r2, t2, p2)
        .unwrap()
        .with_circle(3, r3, t3, p3)
        .unwrap()
}

/// A monotone map of `[0, 1]` onto itself fixing both ends; `|a| < 1` keeps it strictly increasing.
fn warp(a: f64, k: f64) -> impl Fn(f64) -> f64 {
    move |u| u + a * (2.0 * PI * k * u).sin() / (2.0 * PI * k)
}

fn max_norm<'a>(it: impl Iterator<Item = &'a Complex64>) -> f64 {
    it.map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn fields_are_conjugate_symmetric(alpha in 0.2f64..=2.0, extra in 3i32..6) {
        let sol = solve(alpha, &[2, extra], SecondOrder::Full);
        prop_assert!(sol.rho1.conjugate_symmetry_defect() < 1e-12);
        prop_assert!(sol.psi1bar_1.conjugate_symmetry_defect() < 1e-12);
        prop_assert!(sol.rho2.as_ref().unwrap().rho2.conjugate_symmetry_defect() < 1e-12);
    }

    #[test]
    fn gauge_fixed_means_vanish(alpha in 0.2f64..=2.0, m in 2i32..6) {
        let sol = solve(alpha, &[m], SecondOrder::AveragedOnly);
        prop_assert!(max_norm(sol.rho1.mode_or_zero(0).iter()) < 1e-12);
        prop_assert!(sol.chi1.abs() < 1e-12);
        let mean = sol.psi1bar_1.mean();
        prop_assert!(max_norm(mean.modes().flat_map(|(_, v)| v.iter())) < 1e-12);
    }

    #[test]
    fn mean_projection_is_idempotent(alpha in 0.2f64..=2.0, m in 2i32..6) {
        let sol = solve(alpha, &[m], SecondOrder::AveragedOnly);
        let once = sol.psi1bar_1.add(&sol.rho1).unwrap().project_away_mean();
        let twice = once.project_away_mean();
        prop_assert!(once.sub(&twice).unwrap().max_norm() < 1e-15);
    }

    #[test]
    fn first_order_is_linear_and_chi2_quadratic(
        alpha in 0.2f64..=2.0,
        (cr, ci) in (-2.0f64..2.0, -2.0f64..2.0),
        (lr, li) in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let sol = solve(alpha, &[2, 3], SecondOrder::AveragedOnly);
        let c = Complex64::new(cr, ci);
        let base = |m: i32| if m > 0 { Complex64::new(lr, li) } else { Complex64::new(lr, -li) };
        let scaled = |m: i32| if m > 0 { c * base(m) } else { c.conj() * base(m) };
        let gap = sol.rho1_for(scaled).sub(&sol.rho1_for(base).scale(c)).unwrap();
        let size = 1.0 + sol.rho1_for(scaled).max_norm();
        let pos = max_norm(gap.modes().filter(|(m, _)| *m > 0).flat_map(|(_, v)| v.iter()));
        prop_assert!(pos < 1e-12 * size);
        for (a, b) in sol.chi2_for(scaled).iter().zip(sol.chi2_for(base)) {
            prop_assert!((a - c.norm_sqr() * b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn loop_area_ignores_reparameterization(
        (r2, t2, p2) in (0.2f64..1.5, -3.0f64..3.0, 0.0f64..6.3),
        (r3, t3, p3) in (0.2f64..1.5, -3.0f64..3.0, 0.0f64..6.3),
        a in -0.9f64..0.9,
        k in 1u32..3,
    ) {
        let t2 = t2.round();
        let t3 = t3.round();
        let path = two_mode_path(r2, t2, p2, r3, t3, p3);
        let warped = path.reparameterized(warp(a, k as f64), 4096).unwrap();
        let paced = path.clone().with_pacing(Pacing::SmoothStart);
        for m in [2, 3] {
            let area = path.loop_area(m).unwrap().area;
            prop_assert!((area - warped.loop_area(m).unwrap().area).abs() < 1e-6 * (1.0 + area.abs()));
            prop_assert!((area - paced.loop_area(m).unwrap().area).abs() < 1e-9 * (1.0 + area.abs()));
        }
    }

    #[test]
    fn reversing_the_loop_flips_the_area(
        (r2, t2, p2) in (0.2f64..1.5, -3.0f64..3.0, 0.0f64..6.3),
        (r3, t3, p3) in (0.2f64..1.5, -3.0f64..3.0, 0.0f64..6.3),
    ) {
        let path = two_mode_path(r2, t2.round(), p2, r3, t3.round(), p3);
        let reversed = path.reparameterized(|u| 1.0 - u, 2048).unwrap();
        for m in [2, 3] {
            let area = path.loop_area(m).unwrap().area;
            prop_assert!((area + reversed.loop_area(m).unwrap().area).abs() < 1e-9 * (1.0 + area.abs()));
        }
    }

    #[test]
    fn area_scales_with_the_square_of_the_amplitude(r in 0.1f64..2.0, s in 0.1f64..3.0, turns in -3i32..4) {
        let one = DeformationPath::new(0.02, 0.01, 1.0).unwrap().with_circle(2, r, turns as f64, 0.4).unwrap();
        let big = DeformationPath::new(0.02, 0.01, 1.0).unwrap().with_circle(2, s * r, turns as f64, 0.4).unwrap();
        let a = one.loop_area(2).unwrap().area;
        prop_assert!((big.loop_area(2).unwrap().area - s * s * a).abs() < 1e-9 * (1.0 + s * s * a.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn geometric_angle_ignores_reparameterization(
        alpha in 0.3f64..=2.0,
        r in 0.2f64..0.95,
        a in -0.8f64..0.8,
    ) {
        let flow = BaseFlow::power_law(1.0, alpha).unwrap();
        let path = two_mode_path(1.0, 1.0, 0.3, 0.7, -2.0, 1.1);
        let warped = path.reparameterized(warp(a, 1.0), 4096).unwrap();
        let g0 = geometric_angle(&flow, &path, r).unwrap().predicted;
        let g1 = geometric_angle(&flow, &warped, r).unwrap().predicted;
        prop_assert!((g0 - g1).abs() < 1e-7 * (1.0 + g0.abs()));
    }
}
