//! The particle Hamiltonian `H = psi_L + epsilon Psi1 . dL/dtau` assembled from modal profiles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::baseflow::BaseFlow;
use crate::deformation::DeformationPath;
use crate::error::{Error, Result};
use crate::perturbation::{polar_bracket, FourierRadialField, PerturbationSolution};
use crate::spectral::SharedGrid;

/// Order in `delta` kept in the frozen streamfunction `psi_L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PsiOrder {
    #[default]
    First,
    /// Adds the `rho2`, `[rho1, [rho1, psi0]]` and `chi2` terms (needs a full second-order solve).
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Amplitude {
    Lambda(i32),
    LambdaDot(i32),
    LambdaLambda(i32, i32),
    LambdaLambdaDot(i32, i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    /// Part of `psi_L`.
    Frozen,
    /// Part of `epsilon Psi1 . dL/dtau`.
    Slow,
    /// `delta rho1`, the generator of the rearrangement.
    Generator,
    /// `omega_L - omega0` to first order.
    Vorticity,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    amplitude: Amplitude,
    sigma_mode: i32,
    prefactor: f64,
    group: Group,
}

/// A smooth polar field and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PolarSample {
    pub value: f64,
    pub dr: f64,
    pub dsigma: f64,
}

impl PolarSample {
    /// `(-f_y, f_x)` at polar angle `sigma` and radius `r`.
    pub fn skew_gradient(&self, r: f64, sigma: f64) -> (f64, f64) {
        let (s, c) = sigma.sin_cos();
        let fx = c * self.dr - s * self.dsigma / r;
        let fy = s * self.dr + c * self.dsigma / r;
        (-fy, fx)
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    flow: BaseFlow,
    path: DeformationPath,
    grid: SharedGrid,
    order: PsiOrder,
    terms: Vec<Term>,
    /// Row-major `[node][2 * term + {0: value, 1: d/dx}]`.
    table: Vec<Complex64>,
    signed: Vec<i32>,
}

fn ci(v: f64) -> Complex64 {
    Complex64::new(0.0, v)
}

impl HamiltonianModel {
    pub fn new(flow: &BaseFlow, path: &DeformationPath, solution: &PerturbationSolution, order: PsiOrder) -> Result<Self> {
        for m in path.active_modes() {
            if !solution.modes.contains(&m) {
                return Err(Error::Deformation(format!("mode {m} is driven but was not solved")));
            }
        }
        if order == PsiOrder::Second && solution.rho2.is_none() {
            return Err(Error::config(
                "numerics.psi_order",
                "second-order streamfunction needs the full second-order solve",
            ));
        }
        let grid = solution.grid.clone();
        let radii = grid.radii().to_vec();
        let delta = path.delta();
        let epsilon = path.epsilon();
        let signed: Vec<i32> = path.active_modes().into_iter().flat_map(|m| [m, -m]).collect();

        let mut terms = Vec::new();
        let mut profiles: Vec<Vec<Complex64>> = Vec::new();
        let mut push = |amplitude, sigma_mode, prefactor, group, profile: Vec<Complex64>| {
            terms.push(Term { amplitude, sigma_mode, prefactor, group });
            profiles.push(profile);
        };
        let single = |m: i32, v: Vec<Complex64>| FourierRadialField::single(&grid, m, v);
        let rho = |a: i32| solution.rho1.mode_or_zero(a);
        let psi1 = |a: i32| solution.psi1bar_1.mode_or_zero(a);
        // -[f e^{i a sigma}, g0(r)] = (i a / r) g0' f
        let against_radial = |a: i32, f: &[Complex64], g0_prime: &dyn Fn(f64) -> f64| -> Vec<Complex64> {
            f.iter()
                .zip(&radii)
                .map(|(z, &r)| z * ci(f64::from(a)) * (g0_prime(r) / r))
                .collect()
        };
        let dpsi0 = |r: f64| flow.dpsi0(r);
        let domega0 = |r: f64| flow.domega0(r);

        for &a in &signed {
            push(Amplitude::Lambda(a), a, delta, Group::Frozen, against_radial(a, &rho(a), &dpsi0));
            push(Amplitude::Lambda(a), a, delta, Group::Vorticity, against_radial(a, &rho(a), &domega0));
            push(Amplitude::Lambda(a), a, delta, Group::Generator, rho(a));
            push(Amplitude::LambdaDot(a), a, epsilon * delta, Group::Slow, psi1(a));
            let y = solution
                .y(a)
                .ok_or_else(|| Error::Consistency(format!("missing averaged correction for mode {a}")))?;
            push(
                Amplitude::LambdaLambdaDot(a, -a),
                0,
                epsilon * delta * delta,
                Group::Slow,
                y.to_vec(),
            );
        }
        for &a in &signed {
            for &b in &signed {
                let transport = polar_bracket(&single(a, rho(a)), &single(b, psi1(b)))?.mode_or_zero(a + b);
                push(
                    Amplitude::LambdaLambdaDot(a, b),
                    a + b,
                    -epsilon * delta * delta,
                    Group::Slow,
                    transport,
                );
            }
        }
        if order == PsiOrder::Second {
            let rho2 = solution.rho2.as_ref().expect("checked above");
            for &a in &signed {
                for &b in &signed {
                    // [rho_b, psi0] = -(i b / r) psi0' rho_b
                    let inner: Vec<Complex64> = against_radial(b, &rho(b), &dpsi0).into_iter().map(|z| -z).collect();
                    let double = polar_bracket(&single(a, rho(a)), &single(b, inner))?.mode_or_zero(a + b);
                    push(Amplitude::LambdaLambda(a, b), a + b, 0.5 * delta * delta, Group::Frozen, double);
                }
            }
            for ((a, b), v) in rho2.rho2.pairs() {
                if !(signed.contains(&a) && signed.contains(&b)) {
                    continue;
                }
                // -(delta²/2)[rho2, psi0]
                let profile = against_radial(a + b, v, &dpsi0);
                push(Amplitude::LambdaLambda(a, b), a + b, 0.5 * delta * delta, Group::Frozen, profile);
            }
            for (&m, v) in &solution.chi2.values {
                if signed.contains(&m) {
                    let profile = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                    push(Amplitude::LambdaLambda(m, -m), 0, delta * delta, Group::Frozen, profile);
                }
            }
        }

        let width = 2 * terms.len();
        let mut table = vec![Complex64::new(0.0, 0.0); grid.len() * width];
        for (k, p) in profiles.iter().enumerate() {
            let px = grid.dx(p);
            for j in 0..grid.len() {
                table[j * width + 2 * k] = p[j];
                table[j * width + 2 * k + 1] = px[j];
            }
        }
        Ok(Self {
            flow: flow.clone(),
            path: path.clone(),
            grid,
            order,
            terms,
            table,
            signed,
        })
    }

    pub fn path(&self) -> &DeformationPath {
        &self.path
    }

    pub fn flow(&self) -> &BaseFlow {
        &self.flow
    }

    /// Smallest radius resolved by the modal profiles.
    pub fn inner_radius(&self) -> f64 {
        self.grid.r_min()
    }

    pub fn order(&self) -> PsiOrder {
        self.order
    }

    /// Slow time `tau = epsilon t`.
    pub fn tau(&self, t: f64) -> f64 {
        self.path.epsilon() * t
    }

    /// Radius of the deformed boundary at slow time `tau`.
    pub fn boundary_radius(&self, tau: f64, sigma: f64) -> f64 {
        self.path.boundary_radius_complex(tau, sigma).re
    }

    pub fn contains(&self, x: f64, y: f64, tau: f64) -> bool {
        x.hypot(y) <= self.boundary_radius(tau, y.atan2(x))
    }

    fn evaluate(&self, r: f64, sigma: f64, tau: f64, groups: &[Group]) -> PolarSample {
        let amps: Vec<(i32, Complex64, Complex64)> = self
            .signed
            .iter()
            .map(|&m| {
                let (l, ld) = self.path.lambda_with_rate(m, tau);
                (m, l, ld)
            })
            .collect();
        let get = |m: i32| -> (Complex64, Complex64) {
            amps.iter()
                .find(|e| e.0 == m)
                .map(|e| (e.1, e.2))
                .unwrap_or_default()
        };
        let mut weights = vec![0.0; self.grid.len()];
        self.grid.fill_interpolation_weights(r, &mut weights);
        let width = 2 * self.terms.len();
        let mut out = PolarSample::default();
        for (k, term) in self.terms.iter().enumerate() {
            if !groups.contains(&term.group) {
                continue;
            }
            let amp = match term.amplitude {
                Amplitude::Lambda(a) => get(a).0,
                Amplitude::LambdaDot(a) => get(a).1,
                Amplitude::LambdaLambda(a, b) => get(a).0 * get(b).0,
                Amplitude::LambdaLambdaDot(a, b) => get(a).0 * get(b).1,
            };
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (mut f, mut fx) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (j, &w) in weights.iter().enumerate() {
                f += self.table[j * width + 2 * k] * w;
                fx += self.table[j * width + 2 * k + 1] * w;
            }
            let m = f64::from(term.sigma_mode);
            let c = amp * Complex64::from_polar(term.prefactor, m * sigma);
            out.value += (c * f).re;
            out.dr += (c * fx).re / r;
            out.dsigma += (c * ci(m) * f).re;
        }
        out
    }

    fn polar(x: f64, y: f64) -> (f64, f64) {
        (x.hypot(y), y.atan2(x))
    }

    /// `H` and its polar derivatives; `slow = false` gives the frozen field `psi_L`.
    pub fn sample(&self, x: f64, y: f64, t: f64, slow: bool) -> PolarSample {
        self.sample_at(x, y, self.tau(t), slow)
    }

    /// As [`Self::sample`] at a given slow time.
    pub fn sample_at(&self, x: f64, y: f64, tau: f64, slow: bool) -> PolarSample {
        let (r, sigma) = Self::polar(x, y);
        let groups: &[Group] = if slow { &[Group::Frozen, Group::Slow] } else { &[Group::Frozen] };
        let mut s = self.evaluate(r, sigma, tau, groups);
        let jet = self.flow.jet(r);
        s.value += jet.value;
        s.dr += jet.d1;
        s
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> Result<f64> {
        let tau = self.tau(t);
        if !self.contains(x, y, tau) {
            return Err(Error::OutsideDomain { x, y });
        }
        Ok(self.sample(x, y, t, true).value)
    }

    /// Particle velocity `(-H_y, H_x)`.
    pub fn velocity(&self, x: f64, y: f64, t: f64, slow: bool) -> (f64, f64) {
        self.velocity_at(x, y, self.tau(t), slow)
    }

    pub fn velocity_at(&self, x: f64, y: f64, tau: f64, slow: bool) -> (f64, f64) {
        let (r, sigma) = Self::polar(x, y);
        self.sample_at(x, y, tau, slow).skew_gradient(r, sigma)
    }

    /// Frozen vorticity `omega_L` to first order in `delta`.
    pub fn vorticity(&self, x: f64, y: f64, tau: f64) -> f64 {
        let (r, sigma) = Self::polar(x, y);
        self.flow.omega0(r) + self.evaluate(r, sigma, tau, &[Group::Vorticity]).value
    }

    /// Frozen streamfunction `psi_L` at slow time `tau`.
    pub fn frozen_streamfunction(&self, x: f64, y: f64, tau: f64) -> f64 {
        let (r, sigma) = Self::polar(x, y);
        self.flow.psi0(r) + self.evaluate(r, sigma, tau, &[Group::Frozen]).value
    }

    /// Undeformed-disc coordinates `(I, theta) = (r0²/2, sigma0)` of the point pulled back by
    /// the first-order rearrangement, `(r0, sigma0) = (r + delta rho_sigma / r, sigma - delta rho_r / r)`.
    pub fn pulled_back_action_angle(&self, x: f64, y: f64, tau: f64) -> (f64, f64) {
        let (r, sigma) = Self::polar(x, y);
        let g = self.evaluate(r, sigma, tau, &[Group::Generator]);
        let r0 = r + g.dsigma / r;
        let s0 = sigma - g.dr / r;
        (0.5 * r0 * r0, s0)
    }
}

/// `H(x, y, t)` for one-off evaluations.
pub fn hamiltonian(
    flow: &BaseFlow,
    path: &DeformationPath,
    solution: &PerturbationSolution,
    x: f64,
    y: f64,
    t: f64,
) -> Result<f64> {
    HamiltonianModel::new(flow, path, solution, PsiOrder::First)?.value(x, y, t)
}
