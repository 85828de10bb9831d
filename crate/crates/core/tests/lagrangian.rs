use disc_holonomy::baseflow::BaseFlow;
use disc_holonomy::deformation::{DeformationPath, Pacing};
use disc_holonomy::lagrangian::frozen::point_with_action;
use disc_holonomy::lagrangian::*;
use disc_holonomy::perturbation::{PerturbationSolution, RadialNumerics, SecondOrder};
use std::f64::consts::{PI, TAU};

fn setup(alpha: f64, m: i32, delta: f64, epsilon: f64) -> (BaseFlow, DeformationPath, PerturbationSolution) {
    let flow = BaseFlow::power_law(1.0, alpha).unwrap();
    let solution = PerturbationSolution::solve(&flow, RadialNumerics::default(), &[m], SecondOrder::AveragedOnly).unwrap();
    let path = DeformationPath::new(delta, epsilon, 1.0)
        .unwrap()
        .with_circle(m, 1.0, 1.0, 0.0)
        .unwrap();
    (flow, path, solution)
}

#[test]
fn solid_body_orbit_period() {
    let (flow, path, solution) = setup(2.0, 2, 0.0, 0.1);
    let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
    for r in [0.2, 0.5, 0.9] {
        let orbit = frozen_orbit(&model, 0.0, flow.psi0(r), 1024).unwrap();
        assert!((orbit.period - PI).abs() < 1e-9, "r = {r}: period {}", orbit.period);
        assert!((orbit.action - 0.5 * r * r).abs() < 1e-9);
    }
}

#[test]
fn undeformed_frozen_period_matches_rotation_frequency() {
    let (flow, path, solution) = setup(0.5, 3, 0.0, 0.1);
    let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
    for r in [0.3, 0.8] {
        let orbit = frozen_orbit(&model, 0.25, flow.psi0(r), 1024).unwrap();
        let expected = TAU / flow.rotation_frequency(0.5 * r * r);
        assert!((orbit.period - expected).abs() < 1e-6 * expected, "r = {r}");
    }
}

#[test]
fn deformed_orbit_encloses_requested_action() {
    let (flow, path, solution) = setup(0.5, 3, 0.03, 0.1);
    let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
    let (x, y) = point_with_action(&model, 0.3, 0.32, 1.0, 1024).unwrap();
    let level = model.frozen_streamfunction(x, y, 0.3);
    let orbit = frozen_orbit(&model, 0.3, level, 1024).unwrap();
    assert!((orbit.action - 0.32).abs() < 1e-9);
}

#[test]
fn canonical_angle_on_axis_is_zero() {
    let (flow, path, solution) = setup(0.5, 2, 0.02, 0.1);
    let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
    let (theta, _) = canonical_angle(&model, 0.6, 0.0, 0.1, 2048).unwrap();
    let theta = theta.min(TAU - theta);
    assert!(theta < 1e-8, "theta = {theta}");
}

#[test]
fn undeformed_run_has_no_geometric_angle() {
    let (flow, path, solution) = setup(0.5, 3, 0.0, 0.1);
    let options = HolonomyOptions {
        placement: StartPlacement::Action,
        r0: 0.8,
        sigma0: 0.0,
        dt: 0.02,
        psi_order: PsiOrder::First,
        frozen: FrozenOptions::default(),
    };
    let (run, _) = run_loop(&flow, &path, &solution, &options).unwrap();
    assert!(run.phase.geometric_measured.abs() < 1e-6, "{:?}", run.phase);
    assert!(run.drift.max_drift < 1e-9);
}

#[test]
fn rk4_converges_at_fourth_order() {
    let (flow, path, solution) = setup(0.5, 2, 0.03, 0.2);
    let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
    let start = ParticleState::from_polar(&model, 0.6, 0.4, 0.0).unwrap();
    let end = |dt: f64| {
        let tr = advect(&model, start, 5.0, dt).unwrap();
        let p = *tr.last();
        (p.x, p.y)
    };
    let (a, b, c) = (end(0.04), end(0.02), end(0.01));
    let e1 = (a.0 - b.0).hypot(a.1 - b.1);
    let e2 = (b.0 - c.0).hypot(b.1 - c.1);
    let order = (e1 / e2).log2();
    assert!(order > 3.5 && order < 4.5, "observed order {order}");
}

#[test]
fn coarse_step_is_rejected() {
    let (flow, path, solution) = setup(0.5, 2, 0.03, 0.2);
    let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
    let start = ParticleState::from_polar(&model, 0.5, 0.0, 0.0).unwrap();
    assert!(advect(&model, start, 1.0, 1.0).is_err());
}

#[test]
fn undeformed_fields_are_the_base_flow() {
    let (flow, path, solution) = setup(0.5, 2, 0.0, 0.1);
    let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
    let samples = reconstruct_fields(&model, 0.0, 21, 1.1);
    let mut inside = 0;
    for s in &samples {
        let r = s.x.hypot(s.y);
        if s.inside_flag {
            inside += 1;
            assert!((s.omega - flow.omega0(r)).abs() < 1e-9 * (1.0 + flow.omega0(r).abs()));
            assert!((s.psi - flow.psi0(r)).abs() < 1e-12);
        } else {
            assert!(s.omega.is_nan() && s.psi.is_nan());
        }
    }
    assert!(inside > 200);
}

#[test]
fn boundary_streamfunction_residual_is_second_order() {
    let residual = |delta: f64| {
        let (flow, path, solution) = setup(0.5, 2, delta, 0.1);
        let model = HamiltonianModel::new(&flow, &path, &solution, PsiOrder::First).unwrap();
        (0..64)
            .map(|k| {
                let sigma = TAU * k as f64 / 64.0;
                let r = model.boundary_radius(0.2, sigma) * (1.0 - 1e-13);
                (model.frozen_streamfunction(r * sigma.cos(), r * sigma.sin(), 0.2) - flow.psi0(1.0)).abs()
            })
            .fold(0.0, f64::max)
    };
    let ratio = residual(0.02) / residual(0.01);
    assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
}

#[test]
fn smooth_pacing_keeps_the_loop_closed() {
    let (_, path, _) = setup(0.5, 3, 0.03, 0.1);
    let paced = path.clone().with_pacing(Pacing::SmoothStart);
    assert!(paced.lambda_dot(3, 0.0).norm() < 1e-12);
    assert!(paced.lambda_dot(3, 1.0).norm() < 1e-12);
    let a = path.loop_area(3).unwrap().area;
    let b = paced.loop_area(3).unwrap().area;
    assert!((a - b).abs() < 1e-10);
}
