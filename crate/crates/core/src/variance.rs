//! Asymptotic variances of the four estimators, the one-step local
//! fluctuation variance, equilibrium closed forms, and replicate-based
//! empirical estimates.
//!
//! All evaluators work from a [`FlowTrace`], so any initial law is allowed.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{Measure, Model};
use crate::samplers::{ReplicateRow, SamplerKind};
use crate::semigroup::{evolve, FeynmanKac, FkFlow, FlowTrace};
use crate::spectral::{eigensystem, quasi_stationary_law, SpectralBasis};

/// Largest negative round-off tolerated before a variance is rejected.
pub const NEGATIVE_TOL: f64 = 1e-10;

/// Generic two-sum variance of a Feynman-Kac particle model:
/// `Σ_{p<=n} η_p([Q_{p,n}f - η_n f]^2) - Σ_{p<n} η_p(G)^2 η_p([Q_{p,n}f - G η_n f / η_p(G)]^2)`.
pub fn fk_variance(fk: &FeynmanKac, flow: &FkFlow, n: usize, f: &[f64]) -> f64 {
    let hs = fk.backward(flow, n, f);
    let en = dot(&flow.etas[n], f);
    let mut total = 0.0;
    for p in 0..=n {
        let sq: Vec<f64> = hs[p].iter().map(|h| (h - en).powi(2)).collect();
        total += dot(&flow.etas[p], &sq);
    }
    for p in 0..n {
        let gp = flow.masses[p];
        let sq: Vec<f64> =
            hs[p].iter().zip(&fk.potential).map(|(h, g)| (h - g * en / gp).powi(2)).collect();
        total -= gp * gp * dot(&flow.etas[p], &sq);
    }
    total
}

/// Centred form `η_n(h^2) + Σ_{p<n} (1 - η_p(G)^2) η_p([Q_{p,n} h]^2)`, `h = f - η_n f`.
pub fn fk_centered_variance(fk: &FeynmanKac, flow: &FkFlow, n: usize, f: &[f64]) -> f64 {
    let en = dot(&flow.etas[n], f);
    let h: Vec<f64> = f.iter().map(|v| v - en).collect();
    let hs = fk.backward(flow, n, &h);
    let mut total = dot(&flow.etas[n], &square(&h));
    for p in 0..n {
        let gp = flow.masses[p];
        total += (1.0 - gp * gp) * dot(&flow.etas[p], &square(&hs[p]));
    }
    total
}

fn square(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x * x).collect()
}

fn sub(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| x - c).collect()
}

/// Quantity a variance refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Quantity {
    V,
    W,
    VHat,
    WHat,
    WPath,
}

/// How a variance value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    ClosedForm,
    Telescoping,
    Empirical,
}

/// A variance value with its provenance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct VarianceReport {
    pub sampler: SamplerKind,
    pub quantity: Quantity,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub theta: f64,
    pub value: f64,
    pub standard_error: Option<f64>,
    /// Set when a tiny negative round-off was clamped to zero.
    pub clamped: bool,
}

/// Clamps values in `[-NEGATIVE_TOL, 0)` to zero and rejects anything lower.
pub fn clamp_variance(raw: f64) -> Result<(f64, bool)> {
    if raw >= 0.0 {
        Ok((raw, false))
    } else if raw >= -NEGATIVE_TOL {
        Ok((0.0, true))
    } else {
        Err(Error::NegativeVariance(raw))
    }
}

/// Exact variance evaluators for one model and one set of flows.
#[derive(Debug, Clone)]
pub struct VarianceEngine {
    model: Model,
    basis: SpectralBasis,
    soft: FeynmanKac,
    soft_flow: FkFlow,
    hard: FeynmanKac,
    hard_flow: FkFlow,
    tilde: Option<(FeynmanKac, FkFlow)>,
    horizon: usize,
}

impl VarianceEngine {
    /// Builds the engine from precomputed flows.
    pub fn new(model: &Model, trace: &FlowTrace) -> Result<Self> {
        let horizon = trace.horizon();
        let d = model.d();
        let soft = FeynmanKac::soft(model);
        let hard = FeynmanKac::hard(model);
        let soft_flow = FkFlow {
            etas: trace.etas.iter().map(|m| m.weights.clone()).collect(),
            masses: trace.survival[..horizon].to_vec(),
        };
        let hard_flow = FkFlow {
            etas: trace.eta_hats.iter().map(Measure::extended).collect(),
            masses: trace.eta_hats[..horizon].iter().map(|m| 1.0 - m.cemetery).collect(),
        };
        let tilde = if d >= 2 {
            let sd = model.soft_decomposition();
            let fk = FeynmanKac::new(square(&sd.g), sd.m.entries);
            let flow = fk.flow(&model.eta0().weights, horizon)?;
            Some((fk, flow))
        } else {
            None
        };
        Ok(VarianceEngine {
            model: model.clone(),
            basis: eigensystem(model),
            soft,
            soft_flow,
            hard,
            hard_flow,
            tilde,
            horizon,
        })
    }

    /// Evolves the flows to `horizon` and builds the engine.
    pub fn evolve(model: &Model, horizon: usize) -> Result<Self> {
        Self::new(model, &evolve(model, horizon)?)
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn check(&self, n: usize, f: &[f64], len: usize) -> Result<()> {
        if n > self.horizon {
            return Err(Error::InvalidParameter("time horizon exceeds the evolved flow"));
        }
        if f.len() != len {
            return Err(Error::Dimension { expected: len, got: f.len() });
        }
        Ok(())
    }

    fn eta(&self, n: usize) -> &[f64] {
        &self.soft_flow.etas[n]
    }

    /// `η_n(f)`.
    pub fn eta_f(&self, n: usize, f: &[f64]) -> f64 {
        dot(self.eta(n), f)
    }

    /// `η_p(g)`.
    pub fn survival(&self, p: usize) -> f64 {
        dot(self.eta(p), &self.soft.potential)
    }

    fn log_z(&self, n: usize) -> f64 {
        self.soft_flow.masses[..n].iter().map(|m| m.ln()).sum()
    }

    fn dp_factor(&self, n: usize) -> f64 {
        let phi = self.basis.phi0();
        let log_c = n as f64 * self.basis.e0().ln() + self.model.eta0().integrate(phi).ln()
            - self.log_z(n);
        log_c.exp()
    }

    /// `v_dp(f) = c η_n(f^2/φ0) - η_n(f)^2` with `c = E0^n η0(φ0) / η0 Q^n(1)`.
    pub fn v_dp(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        let phi = self.basis.phi0();
        let g: Vec<f64> = f.iter().zip(phi).map(|(v, p)| v * v / p).collect();
        Ok(self.dp_factor(n) * self.eta_f(n, &g) - self.eta_f(n, f).powi(2))
    }

    /// `w_dp(f) = c η_n((f - η_n f)^2 / φ0)`.
    pub fn w_dp(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        let en = self.eta_f(n, f);
        let phi = self.basis.phi0();
        let g: Vec<f64> = f.iter().zip(phi).map(|(v, p)| (v - en).powi(2) / p).collect();
        Ok(self.dp_factor(n) * self.eta_f(n, &g))
    }

    fn tilde(&self) -> Result<&(FeynmanKac, FkFlow)> {
        self.tilde.as_ref().ok_or(Error::DegenerateModel)
    }

    /// `(η0 Q̃^n(1) / Z_n^2, η̃_n)`.
    fn tilde_parts(&self, n: usize) -> Result<(f64, &[f64])> {
        let (_, flow) = self.tilde()?;
        let log_zt: f64 = flow.masses[..n].iter().map(|m| m.ln()).sum();
        Ok(((log_zt - 2.0 * self.log_z(n)).exp(), &flow.etas[n]))
    }

    /// Second-moment ratio `η0 Q̃^n(1) / [η0 Q^n(1)]^2`.
    pub fn is_ratio(&self, n: usize) -> Result<f64> {
        if n > self.horizon {
            return Err(Error::InvalidParameter("time horizon exceeds the evolved flow"));
        }
        Ok(self.tilde_parts(n)?.0)
    }

    /// `v_is(f) = η0 Q̃^n(f^2) / Z_n^2 - η_n(f)^2`.
    pub fn v_is(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        let (c, et) = self.tilde_parts(n)?;
        Ok(c * dot(et, &square(f)) - self.eta_f(n, f).powi(2))
    }

    /// `w_is(f) = c {η̃_n([f - η̃_n f]^2) + (η̃_n f - η_n f)^2}`.
    pub fn w_is(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        let (c, et) = self.tilde_parts(n)?;
        let mt = dot(et, f);
        let spread = dot(et, &square(&sub(f, mt)));
        Ok(c * (spread + (mt - self.eta_f(n, f)).powi(2)))
    }

    /// Two-sum form of `v_soft`.
    pub fn v_soft(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        if self.model.d() < 2 {
            return Err(Error::DegenerateModel);
        }
        Ok(fk_variance(&self.soft, &self.soft_flow, n, f))
    }

    /// `v_soft` rebuilt from one-step local fluctuations:
    /// `Var_{η0}(Q_{0,n} f) + Σ_{1<=p<=n} LF(η_{p-1}, Q_{p,n} f)`.
    pub fn v_soft_telescoping(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        if self.model.d() < 2 {
            return Err(Error::DegenerateModel);
        }
        let hs = self.soft.backward(&self.soft_flow, n, f);
        let e0 = self.eta(0);
        let m0 = dot(e0, &hs[0]);
        let mut total = dot(e0, &square(&sub(&hs[0], m0)));
        for p in 1..=n {
            let eta = Measure { weights: self.eta(p - 1).to_vec(), cemetery: 0.0 };
            total += local_fluctuation(&self.model, &eta, &hs[p])?;
        }
        Ok(total)
    }

    /// `w_soft(f) = v_soft(f - η_n f)`.
    pub fn w_soft(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        self.v_soft(n, &sub(f, self.eta_f(n, f)))
    }

    /// `η_n([f - η_n f]^2) + Σ_{p<n} (1 - η_p(g)^2) η_p([Q_{p,n}(f - η_n f)]^2)`.
    pub fn w_soft_centered(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d())?;
        if self.model.d() < 2 {
            return Err(Error::DegenerateModel);
        }
        Ok(fk_centered_variance(&self.soft, &self.soft_flow, n, f))
    }

    /// Pre-killing variance `v̂_n(f)` for `f` on `S ∪ {c}`.
    pub fn v_hat_hard(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d() + 1)?;
        Ok(fk_variance(&self.hard, &self.hard_flow, n, f))
    }

    /// `ŵ_n(f) = v̂_n(f - η̂_n f)`.
    pub fn w_hat_hard(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d() + 1)?;
        let m = dot(&self.hard_flow.etas[n], f);
        self.v_hat_hard(n, &sub(f, m))
    }

    /// `ŵ_n(f)` from its centred display.
    pub fn w_hat_hard_centered(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check(n, f, self.model.d() + 1)?;
        Ok(fk_centered_variance(&self.hard, &self.hard_flow, n, f))
    }

    fn extend(f: &[f64]) -> Vec<f64> {
        let mut v = f.to_vec();
        v.push(0.0);
        v
    }

    fn check_hard(&self, n: usize, f: &[f64]) -> Result<()> {
        self.check(n, f, self.model.d())?;
        if n == 0 {
            return Err(Error::InvalidParameter("post-killing variances need n >= 1"));
        }
        Ok(())
    }

    /// `v_hard(f) = v̂_n(f 1_S)`; normalised by `Z_{n-1}` rather than `Z_n`.
    pub fn v_hard(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check_hard(n, f)?;
        self.v_hat_hard(n, &Self::extend(f))
    }

    /// `v_hard(f) / η_{n-1}(g)^2`, the variance of `Z^hard_n Z_n^{-1} η^hard_n(f)`.
    pub fn v_hard_normalized(&self, n: usize, f: &[f64]) -> Result<f64> {
        Ok(self.v_hard(n, f)? / self.survival(n - 1).powi(2))
    }

    /// `w_hard(f) = v_hard((f - η_n f) / η_{n-1}(g))`.
    pub fn w_hard(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check_hard(n, f)?;
        let en = self.eta_f(n, f);
        let s = self.survival(n - 1);
        let h: Vec<f64> = f.iter().map(|v| (v - en) / s).collect();
        self.v_hard(n, &h)
    }

    /// `v_hard` from the display summing `η_p K([...]^2)` over the soft flow.
    pub fn v_hard_display(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check_hard(n, f)?;
        let d = self.model.d();
        let q = &self.soft.q;
        let k = self.model.kernel_k();
        let qf = q.apply(f);
        let c = self.eta_f(n - 1, &qf);
        let mut total = 0.0;
        let mut qk_f = f.to_vec();
        let mut qk_1 = vec![1.0; d];
        for p in (0..n).rev() {
            // qk_* hold Q^{n-1-p} applied to f and to 1
            let norm = self.eta_f(p, &qk_1);
            let eta_k = k.within.act_left(self.eta(p));
            let exit = dot(self.eta(p), &k.exit);
            let inside: Vec<f64> = qk_f.iter().map(|v| (v / norm - c).powi(2)).collect();
            total += dot(&eta_k, &inside) + exit * c * c;
            qk_f = q.apply(&qk_f);
            qk_1 = q.apply(&qk_1);
        }
        let hs = self.soft.backward(&self.soft_flow, n - 1, &qf);
        for p in 1..n {
            let sq: Vec<f64> = hs[p].iter().map(|h| (h - c).powi(2)).collect();
            total -= self.survival(p - 1) * self.eta_f(p, &sq);
        }
        Ok(total)
    }

    /// `η_{n-1}(g) w_hard(f)` from the display over the pre-killing flow
    /// with normaliser `η_{p-1} Q^{n-p}(1)`.
    pub fn w_hard_display_prekill(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check_hard(n, f)?;
        let d = self.model.d();
        let en = self.eta_f(n, f);
        let h = sub(f, en);
        let mut total = self.eta_f(n, &square(&h));
        let q = &self.soft.q;
        let sn = self.survival(n - 1);
        let mut qk_h = h.clone();
        let mut qk_1 = vec![1.0; d];
        for p in (1..n).rev() {
            qk_h = q.apply(&qk_h);
            qk_1 = q.apply(&qk_1);
            let norm = self.eta_f(p - 1, &qk_1);
            let sq: Vec<f64> = qk_h.iter().map(|v| (v / norm).powi(2)).collect();
            let eta_hat = &self.hard_flow.etas[p][..d];
            let gp = self.survival(p - 1);
            total += (1.0 - gp * gp) * dot(eta_hat, &sq) / sn;
        }
        Ok(total)
    }

    /// The final line of the same display, in terms of `Q_{p,n}` and the soft flow.
    /// Matches `η_{n-1}(g) w_hard(f)` at equilibrium only.
    pub fn w_hard_display_soft(&self, n: usize, f: &[f64]) -> Result<f64> {
        self.check_hard(n, f)?;
        let en = self.eta_f(n, f);
        let h = sub(f, en);
        let hs = self.soft.backward(&self.soft_flow, n, &h);
        let sn = self.survival(n - 1);
        let mut total = self.eta_f(n, &square(&h));
        for p in 1..n {
            let gp = self.survival(p - 1);
            total += (1.0 - gp * gp) * gp / sn * self.eta_f(p, &square(&hs[p]));
        }
        Ok(total)
    }
}

/// `lim N E[(η^soft_{n+1}(f) - Φ(η^soft_n)(f))^2]` evaluated at `η_n = eta`:
/// `η'(f^2) - η(Q(f)^2) - η'(f)[η((1-g)^2) η'(f) + 2 η((1-g) Q f)]`, `η' = Φ(η)`.
pub fn local_fluctuation(model: &Model, eta: &Measure, f: &[f64]) -> Result<f64> {
    let (fk, next) = one_step(model, eta, f)?;
    let qf = fk.q.apply(f);
    let one_minus_g: Vec<f64> = fk.potential.iter().map(|g| 1.0 - g).collect();
    let m1 = dot(&next, f);
    let a = dot(&next, &square(f)) - eta.integrate(&square(&qf));
    let kill2 = eta.integrate(&square(&one_minus_g));
    let cross: Vec<f64> = one_minus_g.iter().zip(&qf).map(|(a, b)| a * b).collect();
    Ok(a - m1 * (kill2 * m1 + 2.0 * eta.integrate(&cross)))
}

/// Same quantity as `Σ_x η(x) [K_η(f^2)(x) - K_η(f)(x)^2]` with the selection-mutation
/// kernel `K_η f = Q f + (1 - g) η'(f)`.
pub fn local_fluctuation_pairwise(model: &Model, eta: &Measure, f: &[f64]) -> Result<f64> {
    let (fk, next) = one_step(model, eta, f)?;
    let f2 = square(f);
    let (m1, m2) = (dot(&next, f), dot(&next, &f2));
    let qf = fk.q.apply(f);
    let qf2 = fk.q.apply(&f2);
    let per_state: Vec<f64> = (0..f.len())
        .map(|x| {
            let kill = 1.0 - fk.potential[x];
            let k1 = qf[x] + kill * m1;
            let k2 = qf2[x] + kill * m2;
            k2 - k1 * k1
        })
        .collect();
    Ok(eta.integrate(&per_state))
}

/// The centred reduction `η'(h^2) - η(Q(h)^2)` with `h = f - η'(f)`.
pub fn local_fluctuation_centered(model: &Model, eta: &Measure, f: &[f64]) -> Result<f64> {
    let (fk, next) = one_step(model, eta, f)?;
    let h = sub(f, dot(&next, f));
    Ok(dot(&next, &square(&h)) - eta.integrate(&square(&fk.q.apply(&h))))
}

fn one_step(model: &Model, eta: &Measure, f: &[f64]) -> Result<(FeynmanKac, Vec<f64>)> {
    let d = model.d();
    if f.len() != d || eta.dim() != d {
        return Err(Error::Dimension { expected: d, got: f.len().min(eta.dim()) });
    }
    let fk = FeynmanKac::soft(model);
    let (next, _) = fk.step(&eta.weights)?;
    Ok((fk, next))
}

/// `V = Var_π(φ0)` and `W = π([Q(φ0 - π φ0)]^2)`.
pub fn equilibrium_constants(model: &Model) -> (f64, f64) {
    let d = model.d();
    let basis = eigensystem(model);
    let phi = basis.phi0();
    let pi = quasi_stationary_law(d);
    let m = pi.integrate(phi);
    let h = sub(phi, m);
    let qh = model.matrix_q().entries.apply(&h);
    (pi.integrate(&square(&h)), pi.integrate(&square(&qh)))
}

/// At equilibrium, `v_soft_n(φ0) = (n+1) V - n W`.
pub fn equilibrium_v_soft_phi0(model: &Model, n: usize) -> f64 {
    let (v, w) = equilibrium_constants(model);
    (n as f64 + 1.0) * v - n as f64 * w
}

/// At equilibrium, `E0 w_hard_n(f) = π([f-πf]^2) + (1 - E0^2) Σ_{1<=p<n} π([E0^{-p} Q^p (f - π f)]^2)`.
pub fn equilibrium_e0_w_hard(model: &Model, n: usize, f: &[f64]) -> f64 {
    let pi = quasi_stationary_law(model.d());
    let e0 = eigensystem(model).e0();
    let q = model.matrix_q().entries;
    let mut h = sub(f, pi.integrate(f));
    let mut total = pi.integrate(&square(&h));
    for _ in 1..n {
        h = q.apply(&h).iter().map(|v| v / e0).collect();
        total += (1.0 - e0 * e0) * pi.integrate(&square(&h));
    }
    total
}

/// At equilibrium, `v_hard_n(φ0) = E0 {[1 + (n-1)(1 - E0^2)] V + n (1 - E0) π(φ0)^2}`.
pub fn equilibrium_v_hard_phi0(model: &Model, n: usize) -> f64 {
    let basis = eigensystem(model);
    let e0 = basis.e0();
    let pi_phi = quasi_stationary_law(model.d()).integrate(basis.phi0());
    let (v, _) = equilibrium_constants(model);
    let nf = n as f64;
    e0 * ((1.0 + (nf - 1.0) * (1.0 - e0 * e0)) * v + nf * (1.0 - e0) * pi_phi * pi_phi)
}

/// At equilibrium, `w_dp(φ0) = π(φ0)^2 (π(φ0) π(1/φ0) - 1)`.
pub fn equilibrium_w_dp_phi0(model: &Model) -> f64 {
    let basis = eigensystem(model);
    let phi = basis.phi0();
    let pi = quasi_stationary_law(model.d());
    let inv: Vec<f64> = phi.iter().map(|p| 1.0 / p).collect();
    let m = pi.integrate(phi);
    m * m * (m * pi.integrate(&inv) - 1.0)
}

/// The printed equilibrium value `π(φ0)(1 - π(φ0))` for `v_dp(φ0)`.
pub fn printed_equilibrium_v_dp_phi0(d: usize) -> f64 {
    let basis = SpectralBasis::new(d, 0.0);
    let m = quasi_stationary_law(d).integrate(basis.phi0());
    m * (1.0 - m)
}

/// Path-space bound `1 + (2n/(1+θ)) (1/(1 - e^{-1})) / sin(π/(d+1))` for unit-oscillation functionals.
pub fn w_soft_path_bound(model: &Model, n: usize) -> f64 {
    let a = core::f64::consts::PI / (model.d() as f64 + 1.0);
    1.0 + 2.0 * n as f64 / (1.0 + model.theta()) / (1.0 - (-1.0f64).exp()) / a.sin()
}

/// Replicate-based variance estimates, scaled by the population size.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EmpiricalVariance {
    /// `N mean[(Z^a/Z η^a(f) - η_n f)^2]`.
    pub v: f64,
    pub v_se: f64,
    /// `N mean[(η^a(f) - η_n f)^2]`.
    pub w: f64,
    pub w_se: f64,
    pub replicates: usize,
}

/// Mean and jackknife standard error of `values`.
pub fn jackknife_mean(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let total: f64 = values.iter().sum();
    let mean = total / r;
    let loo: Vec<f64> = values.iter().map(|v| (total - v) / (r - 1.0)).collect();
    let loo_mean = loo.iter().sum::<f64>() / r;
    let var = (r - 1.0) / r * loo.iter().map(|m| (m - loo_mean).powi(2)).sum::<f64>();
    (mean, var.sqrt())
}

/// Squared errors about the exact `(Z_n, η_n(f))`, scaled by `particles`.
pub fn empirical_variance(
    rows: &[ReplicateRow],
    z_true: f64,
    eta_f_true: f64,
    particles: usize,
) -> Result<EmpiricalVariance> {
    if rows.len() < 2 {
        return Err(Error::TooFewReplicates { got: rows.len(), need: 2 });
    }
    let nf = particles as f64;
    let v_terms: Vec<f64> =
        rows.iter().map(|r| nf * (r.z / z_true * r.eta_f - eta_f_true).powi(2)).collect();
    let w_terms: Vec<f64> = rows.iter().map(|r| nf * (r.eta_f - eta_f_true).powi(2)).collect();
    let (v, v_se) = jackknife_mean(&v_terms);
    let (w, w_se) = jackknife_mean(&w_terms);
    Ok(EmpiricalVariance { v, v_se, w, w_se, replicates: rows.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_values() {
        let c = Model::fixture_c();
        let e = VarianceEngine::evolve(&c, 5).unwrap();
        assert!((e.v_is(1, &[1.0; 3]).unwrap() - 0.0416306).abs() < 1e-6);
        let b = Model::fixture_b();
        assert!((equilibrium_v_soft_phi0(&b, 5) - 0.109283).abs() < 1e-5);
        assert!((equilibrium_w_dp_phi0(&b) - 0.030304).abs() < 1e-6);
        assert!((equilibrium_v_hard_phi0(&b, 5) - 1.132249).abs() < 1e-4);
        assert!(printed_equilibrium_v_dp_phi0(3) < 0.0);
        assert!((w_soft_path_bound(&c, 10) - 23.373).abs() < 1e-3);
    }

    #[test]
    fn clamp_policy() {
        assert_eq!(clamp_variance(0.5), Ok((0.5, false)));
        assert_eq!(clamp_variance(-1e-12), Ok((0.0, true)));
        assert!(clamp_variance(-1e-6).is_err());
    }

    #[test]
    fn jackknife_of_mean_is_classical_se() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let (m, se) = jackknife_mean(&xs);
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 3.0;
        assert!((se - (var / 4.0).sqrt()).abs() < 1e-14);
    }
}
