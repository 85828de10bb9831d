//! TOML run configuration.
//!
//! Every physical parameter is validated before any solve. Errors carry the dotted key path of
//! the offending entry, e.g. `deformation.modes[1].m`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::baseflow::BaseFlow;
use crate::deformation::{DeformationPath, Pacing};
use crate::error::{Error, Result};
use crate::lagrangian::{FrozenOptions, HolonomyOptions, PsiOrder, StartPlacement};
use crate::perturbation::{RadialNumerics, SecondOrder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub base_flow: BaseFlowConfig,
    #[serde(default)]
    pub deformation: DeformationConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub run: RunBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaseFlowKind {
    #[default]
    PowerLaw,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseFlowConfig {
    #[serde(default)]
    pub kind: BaseFlowKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Two-column `(r, psi0)` file, relative to the config file.
    #[serde(default)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    #[default]
    Circle,
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub m: i32,
    #[serde(default)]
    pub curve: CurveKind,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub turns: f64,
    #[serde(default)]
    pub phase: f64,
    /// Uniform samples over `[0, T]` including both endpoints.
    #[serde(default)]
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationConfig {
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "one")]
    pub period: f64,
    #[serde(default)]
    pub pacing: Pacing,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub modes: Vec<ModeConfig>,
}

impl Default for DeformationConfig {
    fn default() -> Self {
        Self {
            delta: 0.0,
            epsilon: default_epsilon(),
            period: 1.0,
            pacing: Pacing::Uniform,
            samples: default_samples(),
            modes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SecondOrderConfig {
    #[default]
    Full,
    AveragedOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_n_radial")]
    pub n_radial: usize,
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Only the classical fourth-order Runge-Kutta scheme is provided.
    #[serde(default = "default_integrator_order")]
    pub integrator_order: u32,
    #[serde(default)]
    pub psi_order: PsiOrder,
    #[serde(default)]
    pub second_order: SecondOrderConfig,
    #[serde(default = "default_steps_per_orbit")]
    pub steps_per_orbit: usize,
    #[serde(default = "default_frozen_levels")]
    pub frozen_levels: usize,
    #[serde(default = "default_frozen_taus")]
    pub frozen_taus: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            n_radial: default_n_radial(),
            r_min: default_r_min(),
            dt: default_dt(),
            integrator_order: default_integrator_order(),
            psi_order: PsiOrder::First,
            second_order: SecondOrderConfig::Full,
            steps_per_orbit: default_steps_per_orbit(),
            frozen_levels: default_frozen_levels(),
            frozen_taus: default_frozen_taus(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default)]
    pub sigma0: f64,
    /// Defaults to one slow period `T / epsilon`.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub placement: StartPlacement,
    /// Radii at which profiles are tabulated; the solver grid when empty.
    #[serde(default)]
    pub radii: Vec<f64>,
    /// Slow time of the `fields` snapshot.
    #[serde(default)]
    pub tau: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_extent")]
    pub extent: f64,
    /// Keep every n-th trajectory point in the output.
    #[serde(default = "one_usize")]
    pub stride: usize,
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            r0: default_r0(),
            sigma0: 0.0,
            t_end: None,
            placement: StartPlacement::Action,
            radii: Vec::new(),
            tau: 0.0,
            grid: default_grid(),
            extent: default_extent(),
            stride: 1,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_samples() -> usize {
    crate::deformation::DEFAULT_SAMPLES
}
fn default_n_radial() -> usize {
    64
}
fn default_r_min() -> f64 {
    1e-3
}
fn default_dt() -> f64 {
    0.02
}
fn default_integrator_order() -> u32 {
    4
}
fn default_steps_per_orbit() -> usize {
    1024
}
fn default_frozen_levels() -> usize {
    7
}
fn default_frozen_taus() -> usize {
    16
}
fn default_r0() -> f64 {
    0.5
}
fn default_grid() -> usize {
    101
}
fn default_extent() -> f64 {
    1.1
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be finite and > 0, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let key = e
                .span()
                .and_then(|s| text.get(..s.start))
                .map(|head| format!("line {}", head.lines().count().max(1)))
                .unwrap_or_else(|| "<document>".into());
            Error::config(key, message)
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Read, parse and validate; relative table paths are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        if let Some(table) = &config.base_flow.table {
            if table.is_relative() {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                config.base_flow.table = Some(base.join(table));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.base_flow;
        finite("base_flow.amplitude", b.amplitude)?;
        if b.amplitude == 0.0 {
            return Err(Error::config("base_flow.amplitude", "must be nonzero"));
        }
        match b.kind {
            BaseFlowKind::PowerLaw => {
                let alpha = b
                    .alpha
                    .ok_or_else(|| Error::config("base_flow.alpha", "required for kind = \"power_law\""))?;
                if !(alpha > 0.0 && alpha <= 2.0) {
                    return Err(Error::config("base_flow.alpha", format!("must lie in (0, 2], got {alpha}")));
                }
            }
            BaseFlowKind::Table => {
                if b.table.is_none() {
                    return Err(Error::config("base_flow.table", "required for kind = \"table\""));
                }
            }
        }

        let d = &self.deformation;
        if !(d.delta >= 0.0 && d.delta.is_finite()) {
            return Err(Error::config("deformation.delta", format!("must be finite and >= 0, got {}", d.delta)));
        }
        positive("deformation.epsilon", d.epsilon)?;
        positive("deformation.period", d.period)?;
        if d.samples < 3 {
            return Err(Error::config("deformation.samples", "must be at least 3"));
        }
        let mut seen = BTreeMap::new();
        for (i, mode) in d.modes.iter().enumerate() {
            let key = |field: &str| format!("deformation.modes[{i}].{field}");
            if mode.m == 0 {
                return Err(Error::config(key("m"), "mode 0 is excluded; the mean shape is fixed"));
            }
            if let Some(j) = seen.insert(mode.m.abs(), i) {
                return Err(Error::config(
                    key("m"),
                    format!("mode {} duplicates deformation.modes[{j}]; list each |m| once", mode.m),
                ));
            }
            finite(&key("radius"), mode.radius)?;
            finite(&key("turns"), mode.turns)?;
            finite(&key("phase"), mode.phase)?;
            if mode.curve == CurveKind::Samples {
                if mode.re.len() < 3 || mode.re.len() != mode.im.len() {
                    return Err(Error::config(key("re"), "re and im must have equal length of at least 3"));
                }
                if mode.re.iter().chain(&mode.im).any(|v| !v.is_finite()) {
                    return Err(Error::config(key("re"), "samples must be finite"));
                }
            }
        }

        let n = &self.numerics;
        if n.n_radial < 8 {
            return Err(Error::config("numerics.n_radial", "must be at least 8"));
        }
        if !(n.r_min > 0.0 && n.r_min < 1.0) {
            return Err(Error::config("numerics.r_min", format!("must lie in (0, 1), got {}", n.r_min)));
        }
        positive("numerics.dt", n.dt)?;
        if n.integrator_order != 4 {
            return Err(Error::config(
                "numerics.integrator_order",
                format!("only the fourth-order Runge-Kutta scheme is available, got {}", n.integrator_order),
            ));
        }
        if n.steps_per_orbit < 16 {
            return Err(Error::config("numerics.steps_per_orbit", "must be at least 16"));
        }
        if n.frozen_levels < 2 {
            return Err(Error::config("numerics.frozen_levels", "must be at least 2"));
        }
        if n.frozen_taus < 1 {
            return Err(Error::config("numerics.frozen_taus", "must be at least 1"));
        }

        let r = &self.run;
        if !(r.r0 > 0.0 && r.r0 < 1.0) {
            return Err(Error::config("run.r0", format!("must lie in (0, 1), got {}", r.r0)));
        }
        finite("run.sigma0", r.sigma0)?;
        if let Some(t) = r.t_end {
            positive("run.t_end", t)?;
        }
        for (i, &x) in r.radii.iter().enumerate() {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::config(format!("run.radii[{i}]"), format!("must lie in (0, 1], got {x}")));
            }
        }
        finite("run.tau", r.tau)?;
        if r.grid < 2 {
            return Err(Error::config("run.grid", "must be at least 2"));
        }
        positive("run.extent", r.extent)?;
        if r.stride == 0 {
            return Err(Error::config("run.stride", "must be at least 1"));
        }
        Ok(())
    }

    pub fn base_flow(&self) -> Result<BaseFlow> {
        let b = &self.base_flow;
        match b.kind {
            BaseFlowKind::PowerLaw => BaseFlow::power_law(b.amplitude, b.alpha.unwrap_or(f64::NAN)),
            BaseFlowKind::Table => {
                let path = b
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::config("base_flow.table", "missing"))?;
                BaseFlow::from_table_file(path)
            }
        }
    }

    pub fn path(&self) -> Result<DeformationPath> {
        let d = &self.deformation;
        let mut path = DeformationPath::new(d.delta, d.epsilon, d.period)?
            .with_sample_count(d.samples)
            .with_pacing(d.pacing);
        for (i, mode) in d.modes.iter().enumerate() {
            let tagged = |e: Error| Error::config(format!("deformation.modes[{i}]"), e.to_string());
            path = match mode.curve {
                CurveKind::Circle => path.with_circle(mode.m, mode.radius, mode.turns, mode.phase),
                CurveKind::Samples => {
                    let values = mode.re.iter().zip(&mode.im).map(|(&a, &b)| Complex64::new(a, b)).collect();
                    path.with_samples(mode.m, values)
                }
            }
            .map_err(tagged)?;
        }
        Ok(path)
    }

    /// Positive mode indices of the deformation.
    pub fn modes(&self) -> Vec<i32> {
        let mut m: Vec<i32> = self.deformation.modes.iter().map(|c| c.m.abs()).collect();
        m.sort_unstable();
        m
    }

    pub fn radial_numerics(&self) -> RadialNumerics {
        RadialNumerics {
            n_radial: self.numerics.n_radial,
            r_min: self.numerics.r_min,
        }
    }

    pub fn second_order(&self) -> SecondOrder {
        match self.numerics.second_order {
            SecondOrderConfig::Full => SecondOrder::Full,
            SecondOrderConfig::AveragedOnly => SecondOrder::AveragedOnly,
        }
    }

    pub fn frozen_options(&self) -> FrozenOptions {
        FrozenOptions {
            n_levels: self.numerics.frozen_levels,
            n_tau: self.numerics.frozen_taus,
            steps_per_orbit: self.numerics.steps_per_orbit,
        }
    }

    pub fn holonomy_options(&self) -> HolonomyOptions {
        HolonomyOptions {
            placement: self.run.placement,
            r0: self.run.r0,
            sigma0: self.run.sigma0,
            dt: self.numerics.dt,
            psi_order: self.numerics.psi_order,
            frozen: self.frozen_options(),
        }
    }

    /// Hex SHA-256 of the canonical TOML rendering of the validated configuration.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).unwrap_or_default();
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[base_flow]
alpha = 0.5

[deformation]
delta = 0.03
epsilon = 0.02

[[deformation.modes]]
m = 3
"#;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_toml(BASIC).unwrap();
        assert_eq!(c.numerics.n_radial, 64);
        assert_eq!(c.modes(), vec![3]);
        let path = c.path().unwrap();
        assert!((path.loop_area(3).unwrap().area - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn errors_name_the_key() {
        let bad = BASIC.replace("alpha = 0.5", "alpha = 2.5");
        assert_eq!(key_of(RunConfig::from_toml(&bad).unwrap_err()), "base_flow.alpha");
        let bad = BASIC.replace("delta = 0.03", "delta = -1.0");
        assert_eq!(key_of(RunConfig::from_toml(&bad).unwrap_err()), "deformation.delta");
        let bad = BASIC.replace("epsilon = 0.02", "epsilon = 0.0");
        assert_eq!(key_of(RunConfig::from_toml(&bad).unwrap_err()), "deformation.epsilon");
        let bad = BASIC.replace("m = 3", "m = 0");
        assert_eq!(key_of(RunConfig::from_toml(&bad).unwrap_err()), "deformation.modes[0].m");
        let bad = format!("{BASIC}\n[[deformation.modes]]\nm = -3\n");
        assert_eq!(key_of(RunConfig::from_toml(&bad).unwrap_err()), "deformation.modes[1].m");
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = BASIC.replace("alpha = 0.5", "alpha = 0.5\nalhpa = 1.0");
        let e = RunConfig::from_toml(&bad).unwrap_err();
        assert!(e.to_string().contains("alhpa"), "{e}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::from_toml(BASIC).unwrap();
        let b = RunConfig::from_toml(&BASIC.replace("\n\n", "\n")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig::from_toml(&BASIC.replace("0.03", "0.031")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
