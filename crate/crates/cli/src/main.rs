use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

use disc_holonomy::config::RunConfig;
use disc_holonomy::geometry::{f_m_numeric, f_m_profile, geometric_angle, geometric_angle_numeric};
use disc_holonomy::lagrangian::{
    advect, compare_with_ellipse, reconstruct_fields, run_loop, EllipseCheckOptions, HamiltonianModel, ParticleState,
    StartPlacement,
};
use disc_holonomy::output::{Emitter, Format, Metadata, Table};
use disc_holonomy::perturbation::{ModeConstants, PerturbationSolution};
use disc_holonomy::verify;

#[derive(Parser, Debug)]
#[command(name = "disc-holonomy", version, about = "Geometric angles of fluid particles in a slowly deforming disc")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Table format: csv or json. Scalar summaries are always JSON.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Worker threads (0 picks the number of CPUs).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Reserved for sampled initial conditions; deterministic solves ignore it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exponents and curvature constants per mode.
    Modes,
    /// First-order displacement and streamfunction correction profiles.
    FirstOrder,
    /// Second-order displacement, solvability potential and averaged correction.
    SecondOrder,
    /// f_m profiles and the predicted geometric angle at run.r0.
    GeoAngle,
    /// Frozen vorticity and streamfunction on a Cartesian grid at run.tau.
    Fields,
    /// Particle trajectory and its phase split.
    Advect,
    /// Comparison against the exact rotating ellipse.
    EllipseCheck,
    /// The full acceptance suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::FirstOrder => "first-order",
            Command::SecondOrder => "second-order",
            Command::GeoAngle => "geo-angle",
            Command::Fields => "fields",
            Command::Advect => "advect",
            Command::EllipseCheck => "ellipse-check",
            Command::Verify => "verify",
        }
    }

    fn provenance(self) -> &'static str {
        match self {
            Command::Modes => "alpha_m = sqrt(m^2 + alpha^2 - 2 alpha), beta_m = alpha_m - alpha + 2, gamma_m = alpha/(alpha_m + beta_m); p_m, q_m curvature constants",
            Command::FirstOrder => "rho_1 from the regular radial problem with rho_1(1) = 1; Psi_1 pulled-back first-order streamfunction correction",
            Command::SecondOrder => "chi_2 from the mean solvability condition, rho_2 pair profiles, averaged second-order streamfunction Y_a",
            Command::GeoAngle => "f_m(r) = 2i (1/r) d kappa_m/dr; geometric angle = delta^2 sum_m f_m(r) area_m + O(delta^3)",
            Command::Fields => "frozen vorticity and streamfunction psi_L = psi_0 - delta [rho_1, psi_0] (+ second-order terms when requested)",
            Command::Advect => "RK4 trajectory in the slowly deformed Hamiltonian; dynamic phase int Omega dt from frozen orbits; geometric = total - dynamic",
            Command::EllipseCheck => "uniform-vorticity flow in a rotating ellipse: exact angle -2pi/cosh(2u) per turn vs -2pi + 16 pi delta^2",
            Command::Verify => "acceptance criteria 1-9",
        }
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let path = common
        .config
        .as_ref()
        .context("this subcommand needs --config <path>")?;
    RunConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn radii_for(config: &RunConfig, solution: &PerturbationSolution) -> Vec<f64> {
    if config.run.radii.is_empty() {
        solution.grid.radii().to_vec()
    } else {
        config.run.radii.clone()
    }
}

fn solve(config: &RunConfig) -> Result<PerturbationSolution> {
    let flow = config.base_flow()?;
    Ok(PerturbationSolution::solve(
        &flow,
        config.radial_numerics(),
        &config.modes(),
        config.second_order(),
    )?)
}

fn alpha_of(config: &RunConfig) -> Option<f64> {
    config.base_flow().ok()?.power_law_params().map(|p| p.alpha)
}

fn modes(config: &RunConfig, out: &mut Emitter) -> Result<()> {
    let alpha = alpha_of(config).context("`modes` tabulates closed forms and needs a power-law base flow")?;
    let mut table = Table::new("modes", &["m", "alpha_m", "beta_m", "gamma_m", "p_m", "q_m"]);
    let list = if config.modes().is_empty() { vec![2] } else { config.modes() };
    for m in list {
        let c = ModeConstants::new(alpha, m);
        table.push(vec![m.into(), c.alpha_m.into(), c.beta_m.into(), c.gamma_m.into(), c.p_m.into(), c.q_m.into()]);
    }
    out.table(&table)?;
    Ok(())
}

fn first_order(config: &RunConfig, out: &mut Emitter) -> Result<()> {
    let solution = solve(config)?;
    let alpha = alpha_of(config);
    let radii = radii_for(config, &solution);
    let mut table = Table::new(
        "first_order",
        &["m", "r", "rho1_re", "rho1_im", "psi1_re", "psi1_im", "rho1_closed_im", "psi1_closed_im"],
    );
    for &m in &solution.modes {
        let rho = solution.rho1.mode_or_zero(m);
        let psi = solution.psi1bar_1.mode_or_zero(m);
        let closed = alpha.map(|a| ModeConstants::new(a, m));
        for &r in &radii {
            let a = solution.grid.interpolate(&rho, r);
            let b = solution.grid.interpolate(&psi, r);
            let (ca, cb) = closed.map_or((f64::NAN, f64::NAN), |c| (c.rho1(m, r).im, c.psi1bar_1(m, r).im));
            table.push(vec![m.into(), r.into(), a.re.into(), a.im.into(), b.re.into(), b.im.into(), ca.into(), cb.into()]);
        }
    }
    out.table(&table)?;
    Ok(())
}

fn second_order(config: &RunConfig, out: &mut Emitter) -> Result<()> {
    let solution = solve(config)?;
    let radii = radii_for(config, &solution);
    let mut averaged = Table::new("second_order_averaged", &["m", "r", "chi2", "chi2_prime", "y_re", "y_im"]);
    for &m in &solution.modes {
        let as_complex = |v: &[f64]| -> Vec<Complex64> { v.iter().map(|&x| Complex64::new(x, 0.0)).collect() };
        let chi = as_complex(&solution.chi2.values[&m]);
        let dchi = as_complex(&solution.chi2.derivative[&m]);
        let y = solution.y(m).map(<[_]>::to_vec).unwrap_or_default();
        for &r in &radii {
            let yv = if y.is_empty() { Complex64::new(f64::NAN, f64::NAN) } else { solution.grid.interpolate(&y, r) };
            averaged.push(vec![
                m.into(),
                r.into(),
                solution.grid.interpolate(&chi, r).re.into(),
                solution.grid.interpolate(&dchi, r).re.into(),
                yv.re.into(),
                yv.im.into(),
            ]);
        }
    }
    out.table(&averaged)?;
    if let Some(rho2) = &solution.rho2 {
        let mut pairs = Table::new("second_order_rho2", &["a", "b", "r", "rho2_re", "rho2_im"]);
        for ((a, b), v) in rho2.rho2.pairs() {
            for &r in &radii {
                let z = solution.grid.interpolate(v, r);
                pairs.push(vec![a.into(), b.into(), r.into(), z.re.into(), z.im.into()]);
            }
        }
        out.table(&pairs)?;
        out.summary("second_order_summary", &json!({ "solvability_residual": rho2.solvability_residual }))?;
    }
    Ok(())
}

fn geo_angle(config: &RunConfig, out: &mut Emitter) -> Result<()> {
    let flow = config.base_flow()?;
    let solution = solve(config)?;
    let path = config.path()?;
    let radii = radii_for(config, &solution);
    let closed_form = flow.power_law_params().is_some();
    let mut table = Table::new("f_m", &["m", "r", "f_m_numeric", "f_m_closed"]);
    for &m in &solution.modes {
        let numeric = f_m_numeric(&solution, m)?;
        let values: Vec<Complex64> = numeric.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let closed = if closed_form { Some(f_m_profile(&flow, m, &radii)?) } else { None };
        for (i, &r) in radii.iter().enumerate() {
            let c = closed.as_ref().map_or(f64::NAN, |p| p.values[i]);
            table.push(vec![m.into(), r.into(), solution.grid.interpolate(&values, r).re.into(), c.into()]);
        }
    }
    out.table(&table)?;
    let numeric = geometric_angle_numeric(&solution, &path, config.run.r0)?;
    let closed = if closed_form { Some(geometric_angle(&flow, &path, config.run.r0)?) } else { None };
    out.summary("geo_angle", &json!({ "numeric": numeric, "closed_form": closed }))?;
    Ok(())
}

fn fields(config: &RunConfig, out: &mut Emitter) -> Result<()> {
    let flow = config.base_flow()?;
    let solution = solve(config)?;
    let path = config.path()?;
    let model = HamiltonianModel::new(&flow, &path, &solution, config.numerics.psi_order)?;
    let samples = reconstruct_fields(&model, config.run.tau, config.run.grid, config.run.extent);
    let mut table = Table::new("fields", &["x", "y", "omega", "psi", "inside"]);
    for s in samples {
        table.push(vec![s.x.into(), s.y.into(), s.omega.into(), s.psi.into(), s.inside_flag.into()]);
    }
    out.table(&table)?;
    Ok(())
}

fn run_advect(config: &RunConfig, out: &mut Emitter) -> Result<()> {
    let flow = config.base_flow()?;
    let solution = solve(config)?;
    let path = config.path()?;
    let options = config.holonomy_options();
    let loop_end = path.period() / path.epsilon();
    let full_loop = config.run.t_end.map_or(true, |t| (t - loop_end).abs() <= 1e-12 * loop_end) && path.is_closed();
    let (trajectory, summary) = if full_loop && !path.active_modes().is_empty() {
        let (run, trajectory) = run_loop(&flow, &path, &solution, &options)?;
        let predicted = flow
            .power_law_params()
            .map(|_| geometric_angle(&flow, &path, options.r0).map(|g| g.predicted))
            .transpose()?;
        (trajectory, json!({ "loop": run, "predicted_geometric": predicted }))
    } else {
        if options.placement == StartPlacement::Action && !path.active_modes().is_empty() {
            eprintln!("note: partial runs start at the Eulerian point (run.r0, run.sigma0)");
        }
        let model = HamiltonianModel::new(&flow, &path, &solution, options.psi_order)?;
        let start = ParticleState::from_polar(&model, options.r0, options.sigma0, 0.0)?;
        let trajectory = advect(&model, start, config.run.t_end.unwrap_or(loop_end), options.dt)?;
        let summary = json!({ "polar_angle_change": trajectory.polar_angle_change, "dt": trajectory.dt });
        (trajectory, summary)
    };
    let mut table = Table::new("trajectory", &["t", "tau", "x", "y", "I", "theta", "H"]);
    for p in trajectory.points.iter().step_by(config.run.stride) {
        table.push(vec![p.t.into(), p.tau.into(), p.x.into(), p.y.into(), p.action.into(), p.theta_unwrapped.into(), p.h.into()]);
    }
    out.table(&table)?;
    out.summary("advect", &summary)?;
    Ok(())
}

fn ellipse_check(config: Option<&RunConfig>, out: &mut Emitter) -> Result<()> {
    let mut options = EllipseCheckOptions::default();
    if let Some(c) = config {
        options.delta = c.deformation.delta;
        options.epsilon = c.deformation.epsilon;
        options.r0 = c.run.r0;
        options.sigma0 = c.run.sigma0;
        options.dt = c.numerics.dt;
        options.psi_order = c.numerics.psi_order;
    }
    let report = compare_with_ellipse(options)?;
    let mut table = Table::new("ellipse_trajectory", &["t", "x_model", "y_model", "x_exact", "y_exact", "error"]);
    let stride = config.map_or(1, |c| c.run.stride);
    for p in report.points.iter().step_by(stride) {
        table.push(vec![p.t.into(), p.x_model.into(), p.y_model.into(), p.x_exact.into(), p.y_exact.into(), p.error.into()]);
    }
    out.table(&table)?;
    let delta = options.delta;
    let target = -2.0 * std::f64::consts::PI + 16.0 * std::f64::consts::PI * delta * delta;
    out.summary(
        "ellipse_check",
        &json!({
            "options": report.options,
            "ellipse": report.ellipse,
            "max_position_error": report.max_position_error,
            "position_error_bound": report.bound,
            "max_hamiltonian_error": report.max_hamiltonian_error,
            "exact_geometric_angle": report.exact_geometric_angle,
            "pipeline_geometric_angle": report.predicted_geometric_angle,
            "asymptotic_target": target,
            "exact_minus_target": report.exact_geometric_angle - target,
        }),
    )?;
    println!(
        "exact {:.9}  pipeline {:.9}  -2pi + 16pi delta^2 = {:.9}  max position error {:.3e} (bound {:.3e})",
        report.exact_geometric_angle, report.predicted_geometric_angle, target, report.max_position_error, report.bound
    );
    Ok(())
}

fn run_verify(out: &mut Emitter) -> Result<bool> {
    let reports = verify::run_all();
    for r in &reports {
        println!("{}", r.line());
    }
    // Runtimes stay on the console so the file is reproducible.
    let results: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            json!({
                "id": r.id,
                "name": r.name,
                "passed": r.passed,
                "checks": r.checks,
                "runtime_limit_s": r.runtime_limit_s,
                "error": r.error,
            })
        })
        .collect();
    let all = reports.iter().all(|r| r.passed);
    out.summary("verify", &json!({ "all_passed": all, "criteria": results }))?;
    Ok(all)
}

fn run(cli: Cli) -> Result<bool> {
    if cli.common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let format: Format = cli.common.format.parse()?;
    let command = cli.command;
    let config = match command {
        Command::Verify => None,
        Command::EllipseCheck => cli.common.config.as_ref().map(|_| load_config(&cli.common)).transpose()?,
        _ => Some(load_config(&cli.common)?),
    };
    let hash = config.as_ref().map_or_else(|| "none".to_string(), RunConfig::hash);
    let meta = Metadata::new(hash, command.name(), command.provenance());
    let mut out = Emitter::new(&cli.common.out, format, meta)?;
    let ok = match (command, config.as_ref()) {
        (Command::Verify, _) => run_verify(&mut out)?,
        (Command::EllipseCheck, c) => {
            ellipse_check(c, &mut out)?;
            true
        }
        (cmd, Some(c)) => {
            match cmd {
                Command::Modes => modes(c, &mut out)?,
                Command::FirstOrder => first_order(c, &mut out)?,
                Command::SecondOrder => second_order(c, &mut out)?,
                Command::GeoAngle => geo_angle(c, &mut out)?,
                Command::Fields => fields(c, &mut out)?,
                Command::Advect => run_advect(c, &mut out)?,
                Command::Verify | Command::EllipseCheck => unreachable!(),
            }
            true
        }
        (_, None) => bail!("missing configuration"),
    };
    for path in out.written() {
        eprintln!("wrote {}", path.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
