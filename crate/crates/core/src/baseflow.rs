//! Axisymmetric base states `psi0(r)` on the unit disc.
//!
//! Sign convention: a positive amplitude makes `psi0` increase outward, so the
//! fluid turns counterclockwise (`u_sigma = psi0'`).

use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectral::ChebSeries;

/// Square of the first zero of `J0`: the first Dirichlet eigenvalue of `-Laplacian` on the unit disc.
pub const POINCARE_CONSTANT: f64 = 5.783_185_962_946_784;

/// Radii below this are never sampled by the diagnostics.
const DIAGNOSTIC_R_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLaw {
    pub amplitude: f64,
    pub alpha: f64,
}

/// `psi0` and its first three radial derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Smooth fit of tabulated `psi0` in `t = ln r`, continued below the table as a power law in `psi0'`.
#[derive(Debug, Clone)]
pub struct TabulatedFlow {
    series: ChebSeries,
    d1: ChebSeries,
    d2: ChebSeries,
    d3: ChebSeries,
    r_lo: f64,
    r_hi: f64,
}

#[derive(Debug, Clone)]
pub enum BaseFlowKind {
    PowerLaw(PowerLaw),
    Tabulated(TabulatedFlow),
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowDiagnostics {
    /// `psi0'` keeps one sign on the sampled radii.
    pub h2_satisfied: bool,
    pub min_abs_dpsi0: f64,
    /// `F' > -c_poi` on the sampled radii (Arnold's second condition written through `F = G^{-1}`).
    pub h1_satisfied: bool,
    pub min_f_prime: f64,
    pub c_poi: f64,
    pub sampled_from: f64,
}

#[derive(Debug, Clone)]
pub struct BaseFlow {
    kind: BaseFlowKind,
    diagnostics: FlowDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionAngle {
    pub action: f64,
    pub angle: f64,
}

impl BaseFlow {
    pub fn power_law(amplitude: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::BaseFlow(format!("exponent {alpha} outside (0, 2]")));
        }
        if !amplitude.is_finite() || amplitude == 0.0 {
            return Err(Error::BaseFlow(format!("amplitude {amplitude} must be finite and nonzero")));
        }
        Ok(Self::with_kind(BaseFlowKind::PowerLaw(PowerLaw { amplitude, alpha })))
    }

    /// Fit a table of `(r, psi0)` samples covering some `[r_lo, 1]`.
    pub fn tabulated(radii: &[f64], psi: &[f64]) -> Result<Self> {
        if radii.len() != psi.len() || radii.len() < 8 {
            return Err(Error::BaseFlow("table needs at least 8 matching (r, psi0) rows".into()));
        }
        if radii.iter().any(|&r| !(r > 0.0 && r <= 1.0 + 1e-12)) {
            return Err(Error::BaseFlow("table radii must lie in (0, 1]".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BaseFlow("table radii must be strictly increasing".into()));
        }
        let r_lo = radii[0];
        let r_hi = *radii.last().unwrap();
        if r_hi < 1.0 - 1e-9 {
            return Err(Error::BaseFlow("table must reach the boundary r = 1".into()));
        }
        let t: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
        let degree = (radii.len() - 1).min(40);
        let series = ChebSeries::fit(t[0], r_hi.ln(), &t, psi, degree)
            .ok_or_else(|| Error::BaseFlow("least-squares fit failed".into()))?;
        let d1 = series.derivative();
        let d2 = d1.derivative();
        let d3 = d2.derivative();
        let flow = TabulatedFlow {
            series,
            d1,
            d2,
            d3,
            r_lo,
            r_hi,
        };
        Ok(Self::with_kind(BaseFlowKind::Tabulated(flow)))
    }

    /// Read a two-column CSV table (`r, psi0`); a non-numeric header row is skipped.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::BaseFlow(format!("{}: {e}", path.display())))?;
        let mut radii = Vec::new();
        let mut psi = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::BaseFlow(e.to_string()))?;
            let parsed: Option<(f64, f64)> = match (record.get(0), record.get(1)) {
                (Some(a), Some(b)) => a.parse().ok().zip(b.parse().ok()),
                _ => None,
            };
            match parsed {
                Some((r, p)) => {
                    radii.push(r);
                    psi.push(p);
                }
                None if line == 0 => continue,
                None => {
                    return Err(Error::BaseFlow(format!(
                        "{}: unparsable row {}",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        Self::tabulated(&radii, &psi)
    }

    fn with_kind(kind: BaseFlowKind) -> Self {
        let mut flow = Self {
            kind,
            diagnostics: FlowDiagnostics {
                h2_satisfied: true,
                min_abs_dpsi0: 0.0,
                h1_satisfied: true,
                min_f_prime: 0.0,
                c_poi: POINCARE_CONSTANT,
                sampled_from: DIAGNOSTIC_R_MIN,
            },
        };
        flow.diagnostics = flow.compute_diagnostics();
        flow
    }

    fn compute_diagnostics(&self) -> FlowDiagnostics {
        let samples = 400;
        let log_lo = DIAGNOSTIC_R_MIN.ln();
        let mut min_abs = f64::INFINITY;
        let mut min_fp = f64::INFINITY;
        let mut sign = 0.0;
        let mut h2 = true;
        for i in 0..=samples {
            let r = (log_lo * (1.0 - i as f64 / samples as f64)).exp();
            let d = self.dpsi0(r);
            if sign == 0.0 {
                sign = d.signum();
            }
            if d == 0.0 || d.signum() != sign || !d.is_finite() {
                h2 = false;
            }
            min_abs = min_abs.min(d.abs());
            min_fp = min_fp.min(self.f_prime(r));
        }
        FlowDiagnostics {
            h2_satisfied: h2,
            min_abs_dpsi0: min_abs,
            h1_satisfied: min_fp > -POINCARE_CONSTANT,
            min_f_prime: min_fp,
            c_poi: POINCARE_CONSTANT,
            sampled_from: DIAGNOSTIC_R_MIN,
        }
    }

    pub fn kind(&self) -> &BaseFlowKind {
        &self.kind
    }

    pub fn power_law_params(&self) -> Option<PowerLaw> {
        match self.kind {
            BaseFlowKind::PowerLaw(p) => Some(p),
            BaseFlowKind::Tabulated(_) => None,
        }
    }

    pub fn diagnostics(&self) -> &FlowDiagnostics {
        &self.diagnostics
    }

    pub fn jet(&self, r: f64) -> RadialJet {
        match &self.kind {
            BaseFlowKind::PowerLaw(PowerLaw { amplitude: a, alpha }) => {
                let al = *alpha;
                RadialJet {
                    value: a * r.powf(al),
                    d1: a * al * r.powf(al - 1.0),
                    d2: a * al * (al - 1.0) * r.powf(al - 2.0),
                    d3: a * al * (al - 1.0) * (al - 2.0) * r.powf(al - 3.0),
                }
            }
            BaseFlowKind::Tabulated(tab) => tab.jet(r),
        }
    }

    pub fn psi0(&self, r: f64) -> f64 {
        self.jet(r).value
    }

    pub fn dpsi0(&self, r: f64) -> f64 {
        self.jet(r).d1
    }

    /// `(1/r)(r psi0')'`. Diverges at the origin when `alpha < 2`, with the sign of the amplitude.
    pub fn omega0(&self, r: f64) -> f64 {
        match self.kind {
            BaseFlowKind::PowerLaw(PowerLaw { amplitude, alpha }) => {
                amplitude * alpha * alpha * r.powf(alpha - 2.0)
            }
            BaseFlowKind::Tabulated(_) => {
                let j = self.jet(r);
                j.d2 + j.d1 / r
            }
        }
    }

    pub fn domega0(&self, r: f64) -> f64 {
        match self.kind {
            BaseFlowKind::PowerLaw(PowerLaw { alpha, .. }) if alpha == 2.0 => 0.0,
            BaseFlowKind::PowerLaw(PowerLaw { amplitude, alpha }) => {
                amplitude * alpha * alpha * (alpha - 2.0) * r.powf(alpha - 3.0)
            }
            BaseFlowKind::Tabulated(_) => {
                let j = self.jet(r);
                j.d3 + j.d2 / r - j.d1 / (r * r)
            }
        }
    }

    /// `r psi0'' / psi0'`.
    pub fn stretch(&self, r: f64) -> f64 {
        match self.kind {
            BaseFlowKind::PowerLaw(PowerLaw { alpha, .. }) => alpha - 1.0,
            BaseFlowKind::Tabulated(ref tab) => tab.stretch(r),
        }
    }

    /// `r² omega0' / psi0' = r² F'`.
    pub fn vorticity_ratio(&self, r: f64) -> f64 {
        match self.kind {
            BaseFlowKind::PowerLaw(PowerLaw { alpha, .. }) => alpha * (alpha - 2.0),
            BaseFlowKind::Tabulated(ref tab) => tab.vorticity_ratio(r),
        }
    }

    /// `F'(psi0) = omega0' / psi0'` as a function of radius.
    pub fn f_prime(&self, r: f64) -> f64 {
        self.vorticity_ratio(r) / (r * r)
    }

    /// `G' = 1/F'`, infinite for uniform vorticity.
    pub fn g_prime(&self, r: f64) -> f64 {
        1.0 / self.f_prime(r)
    }

    /// `psi_hat(I) = psi0(sqrt(2 I))`.
    pub fn psi_hat(&self, action: f64) -> f64 {
        self.psi0((2.0 * action).sqrt())
    }

    /// `Omega(I) = d psi_hat / dI = psi0'(r) / r`. Infinite at `I = 0` when `alpha < 2`.
    pub fn rotation_frequency(&self, action: f64) -> f64 {
        match self.kind {
            BaseFlowKind::PowerLaw(PowerLaw { amplitude, alpha }) => {
                amplitude * alpha * (2.0 * action).powf(alpha / 2.0 - 1.0)
            }
            BaseFlowKind::Tabulated(_) => {
                let r = (2.0 * action).sqrt();
                self.dpsi0(r) / r
            }
        }
    }
}

impl TabulatedFlow {
    /// Derivatives of `psi0` with respect to `t = ln r`.
    fn log_jet(&self, t: f64) -> [f64; 4] {
        [
            self.series.eval(t),
            self.d1.eval(t),
            self.d2.eval(t),
            self.d3.eval(t),
        ]
    }

    fn jet(&self, r: f64) -> RadialJet {
        if r < self.r_lo {
            return self.tail_jet(r);
        }
        let r = r.min(self.r_hi);
        let [v, pt, ptt, pttt] = self.log_jet(r.ln());
        RadialJet {
            value: v,
            d1: pt / r,
            d2: (ptt - pt) / (r * r),
            d3: (pttt - 3.0 * ptt + 2.0 * pt) / (r * r * r),
        }
    }

    /// Local power law `psi0' = c r^k` continued from the innermost table radius.
    fn tail_params(&self) -> (f64, f64, f64, f64) {
        let r0 = self.r_lo;
        let [v, pt, ptt, _] = self.log_jet(r0.ln());
        let d1 = pt / r0;
        let k = (ptt - pt) / pt;
        (r0, v, d1, k)
    }

    fn tail_jet(&self, r: f64) -> RadialJet {
        let (r0, v0, d10, k) = self.tail_params();
        let ratio = r / r0;
        let d1 = d10 * ratio.powf(k);
        let value = if (k + 1.0).abs() < 1e-12 {
            v0 + d10 * r0 * ratio.ln()
        } else {
            v0 + d10 * r0 / (k + 1.0) * (ratio.powf(k + 1.0) - 1.0)
        };
        RadialJet {
            value,
            d1,
            d2: k * d1 / r,
            d3: k * (k - 1.0) * d1 / (r * r),
        }
    }

    fn stretch(&self, r: f64) -> f64 {
        if r < self.r_lo {
            return self.tail_params().3;
        }
        let [_, pt, ptt, _] = self.log_jet(r.min(self.r_hi).ln());
        (ptt - pt) / pt
    }

    fn vorticity_ratio(&self, r: f64) -> f64 {
        if r < self.r_lo {
            let k = self.tail_params().3;
            return k * k - 1.0;
        }
        let [_, pt, ptt, pttt] = self.log_jet(r.min(self.r_hi).ln());
        (pttt - 2.0 * ptt) / pt
    }
}

/// `(I, theta) = (r²/2, sigma)`; the origin maps to angle 0.
pub fn to_action_angle(x: f64, y: f64) -> Result<ActionAngle> {
    let r2 = x * x + y * y;
    if r2 > 1.0 + 1e-12 {
        return Err(Error::OutsideDomain { x, y });
    }
    let angle = if r2 == 0.0 { 0.0 } else { wrap_angle(y.atan2(x)) };
    Ok(ActionAngle {
        action: 0.5 * r2,
        angle,
    })
}

pub fn from_action_angle(aa: ActionAngle) -> Result<(f64, f64)> {
    if !(aa.action >= 0.0 && aa.action <= 0.5 + 1e-12) {
        return Err(Error::OutsideDomain {
            x: (2.0 * aa.action.abs()).sqrt(),
            y: 0.0,
        });
    }
    let r = (2.0 * aa.action).sqrt();
    Ok((r * aa.angle.cos(), r * aa.angle.sin()))
}

pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}
