//! Numerical audits of the quantitative statements about the walk: uniform
//! survival estimates, stability rates, spectral gap bounds, variance
//! estimates and the elementary trigonometric inequalities.
//!
//! Every check yields [`CheckReport`]s with a margin `rhs - lhs`; equalities
//! are encoded as `|a - b| <= 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{E, PI};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::{dobrushin_beta, oscillation, rho_ratio, tv_slices, Model};
use crate::rng::RngStream;
use crate::semigroup::FeynmanKac;
use crate::spectral::{
    doob_invariant_law, doob_kernel, eigensystem, quasi_stationary_law, tilde_spectrum,
    SpectralBasis,
};
use crate::trig::{cos_frac, sin_frac};
use crate::variance::{
    equilibrium_constants, equilibrium_v_hard_phi0, printed_equilibrium_v_dp_phi0, VarianceEngine,
};

/// Slack below zero still counted as "holds".
pub const MARGIN_TOL: f64 = 1e-10;

/// Prefix of notes attached to failures that match a catalogued erratum.
pub const KNOWN_ERRATUM: &str = "known erratum";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    Holds,
    Fails,
    NotApplicable,
}

/// Parameters a check was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Params {
    pub d: usize,
    pub theta: f64,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub n: Option<usize>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub x: Option<f64>,
}

impl Params {
    pub fn model(model: &Model) -> Self {
        Params { d: model.d(), theta: model.theta(), n: None, x: None }
    }

    pub fn at(model: &Model, n: usize) -> Self {
        Params { n: Some(n), ..Self::model(model) }
    }
}

/// Outcome of one inequality or identity check.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CheckReport {
    pub check_id: String,
    pub params: Params,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub verdict: Verdict,
    pub note: String,
    /// Set on catalogued entries whose outcome is known in advance.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub expected: Option<Verdict>,
}

impl CheckReport {
    /// `lhs <= rhs`.
    pub fn le(id: &str, params: Params, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        let verdict = if margin >= -MARGIN_TOL { Verdict::Holds } else { Verdict::Fails };
        CheckReport {
            check_id: String::from(id),
            params,
            lhs,
            rhs,
            margin,
            verdict,
            note: String::new(),
            expected: None,
        }
    }

    /// `a == b`, reported as `|a - b| <= 0`.
    pub fn eq(id: &str, params: Params, a: f64, b: f64) -> Self {
        Self::le(id, params, (a - b).abs(), 0.0)
    }

    pub fn not_applicable(id: &str, params: Params, note: &str) -> Self {
        CheckReport {
            check_id: String::from(id),
            params,
            lhs: 0.0,
            rhs: 0.0,
            margin: 0.0,
            verdict: Verdict::NotApplicable,
            note: String::from(note),
            expected: None,
        }
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = String::from(note);
        self
    }

    /// Attaches `note` only when the check failed.
    pub fn note_if_fails(self, note: &str) -> Self {
        if self.verdict == Verdict::Fails {
            self.with_note(note)
        } else {
            self
        }
    }

    pub fn expecting(mut self, verdict: Verdict) -> Self {
        self.expected = Some(verdict);
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// True when no expectation is set or the verdict matches it.
    pub fn as_expected(&self) -> bool {
        self.expected.is_none_or(|e| e == self.verdict)
    }
}

/// Keeps the report with the smallest margin.
fn worst(acc: Option<CheckReport>, r: CheckReport) -> Option<CheckReport> {
    match acc {
        Some(a) if a.margin <= r.margin => Some(a),
        _ => Some(r),
    }
}

/// Which contraction rate a stability check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// The printed rate `Ē1 = E1/E0`.
    Printed,
    /// `max_{i>=1} |E_i| / E0`.
    Spectral,
}

impl RateMode {
    pub const BOTH: [RateMode; 2] = [RateMode::Printed, RateMode::Spectral];

    pub fn tag(self) -> &'static str {
        match self {
            RateMode::Printed => "printed_rate",
            RateMode::Spectral => "estar_rate",
        }
    }

    pub fn rate(self, basis: &SpectralBasis) -> f64 {
        match self {
            RateMode::Printed => basis.e1bar,
            RateMode::Spectral => basis.estar,
        }
    }
}

const PRINTED_RATE_NOTE: &str =
    "known erratum: the printed rate is not a contraction rate when the walk is (nearly) periodic";

fn note_for(mode: RateMode, r: CheckReport) -> CheckReport {
    match mode {
        RateMode::Printed => r.note_if_fails(PRINTED_RATE_NOTE),
        RateMode::Spectral => r,
    }
}

fn powi(r: f64, n: usize) -> f64 {
    r.powi(n as i32)
}

/// `sin(π/(d+1))`.
fn sin_a(d: usize) -> f64 {
    sin_frac(1, d as i64 + 1)
}

/// `(2+θ)/(1+θ)`.
fn rho_g(theta: f64) -> f64 {
    (2.0 + theta) / (1.0 + theta)
}

/// `Q / E0`, with the convention `[1]` when `d = 1`.
fn normalized_q(model: &Model, basis: &SpectralBasis) -> Matrix {
    if model.d() == 1 {
        Matrix::identity(1)
    } else {
        model.matrix_q().entries.scale(1.0 / basis.e0())
    }
}

/// `E0^{-n} Q^n(1)` for `n = 0..=nmax`.
pub fn normalized_survival(model: &Model, nmax: usize) -> Vec<Vec<f64>> {
    let basis = eigensystem(model);
    let qn = normalized_q(model, &basis);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(vec![1.0; model.d()]);
    for n in 0..nmax {
        let next = qn.apply(&out[n]);
        out.push(next);
    }
    out
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Uniform survival estimates for `n = 0..=nmax`: the pairwise ratio bound,
/// both sides of the `E0^n` sandwich, and the `ρ(φ0)` version of it.
pub fn check_survival_bounds_upto(model: &Model, nmax: usize) -> Vec<CheckReport> {
    let basis = eigensystem(model);
    let s = sin_a(model.d());
    let rho_phi = rho_ratio(basis.phi0()).unwrap_or(1.0);
    let mut out = Vec::new();
    for (n, v) in normalized_survival(model, nmax).iter().enumerate() {
        let p = Params::at(model, n);
        let (lo, hi) = (min_of(v), max_of(v));
        out.push(CheckReport::le("thm1.pair_ratio", p, hi / lo, rho_g(model.theta()) / s));
        out.push(CheckReport::le("thm1.lower", p, s, lo));
        out.push(CheckReport::le("thm1.upper", p, hi, 1.0 / s));
        out.push(CheckReport::le("e0_qn1.lower", p, 1.0 / rho_phi, lo));
        out.push(CheckReport::le("e0_qn1.upper", p, hi, rho_phi));
    }
    out
}

pub fn check_survival_bounds(model: &Model, n: usize) -> Vec<CheckReport> {
    at_horizon(check_survival_bounds_upto(model, n), n)
}

fn at_horizon(reports: Vec<CheckReport>, n: usize) -> Vec<CheckReport> {
    reports.into_iter().filter(|r| r.params.n.is_none_or(|m| m == n)).collect()
}

fn random_law(rng: &mut RngStream, d: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| rng.uniform() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Normalised flow `η0 Q^n / η0 Q^n(1)` for `n = 0..=nmax`, stepped with `Q/E0`.
fn normalized_flow(qn: &Matrix, eta0: &[f64], nmax: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(eta0.to_vec());
    for n in 0..nmax {
        let next = qn.act_left(&out[n]);
        let mass: f64 = next.iter().sum();
        out.push(next.iter().map(|x| x / mass).collect());
    }
    out
}

/// Stability of the Doob chain and of the normalised flow, for `n = 0..=nmax`,
/// with both rates. `trials` Rademacher test functions in the eigenbasis of the
/// Doob chain and `trials` random initial laws (pairs) are drawn from `seed`.
pub fn check_flow_stability_upto(model: &Model, nmax: usize, trials: usize, seed: u64) -> Vec<CheckReport> {
    let d = model.d();
    let basis = eigensystem(model);
    let mphi = doob_kernel(model).entries;
    let piphi = doob_invariant_law(d).weights;
    let pi = quasi_stationary_law(d).weights;
    let qn = normalized_q(model, &basis);
    let mut rng = RngStream::new(seed, 0);

    // ‖M^n f‖ / ‖f‖ over centred Rademacher functions
    let phi0 = basis.phi0();
    let mut l2 = vec![0.0f64; nmax + 1];
    if d > 1 {
        for _ in 0..trials {
            let mut f = vec![0.0; d];
            for phi in &basis.eigenfunctions[1..] {
                let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
                for x in 0..d {
                    f[x] += sign * phi[x] / phi0[x];
                }
            }
            let norm = |h: &[f64]| -> f64 {
                dot(&piphi, &h.iter().map(|v| v * v).collect::<Vec<_>>()).sqrt()
            };
            let base = norm(&f);
            for slot in l2.iter_mut() {
                *slot = slot.max(norm(&f) / base);
                f = mphi.apply(&f);
            }
        }
    }

    let mut betas = Vec::with_capacity(nmax + 1);
    let mut power = Matrix::identity(d);
    for _ in 0..=nmax {
        betas.push(dobrushin_beta(&power));
        power = power.mul(&mphi);
    }

    let mut starts: Vec<Vec<f64>> = (0..d)
        .map(|x| {
            let mut v = vec![0.0; d];
            v[x] = 1.0;
            v
        })
        .collect();
    for _ in 0..trials {
        starts.push(random_law(&mut rng, d));
    }
    let flows: Vec<Vec<Vec<f64>>> = starts.iter().map(|s| normalized_flow(&qn, s, nmax)).collect();
    let pair_flows: Vec<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>)> = (0..trials)
        .map(|_| {
            let a = random_law(&mut rng, d);
            let b = random_law(&mut rng, d);
            let tv0 = tv_slices(&a, &b);
            (tv0, normalized_flow(&qn, &a, nmax), normalized_flow(&qn, &b, nmax))
        })
        .collect();

    let mut out = Vec::new();
    for mode in RateMode::BOTH {
        let rate = mode.rate(&basis);
        let tag = mode.tag();
        for n in 0..=nmax {
            let p = Params::at(model, n);
            let rn = powi(rate, n);
            out.push(note_for(mode, CheckReport::le(&format!("thm2.l2.{tag}"), p, l2[n], rn)));
            out.push(note_for(
                mode,
                CheckReport::le(&format!("thm2.beta.{tag}"), p, betas[n], basis.s[0] * rn),
            ));
            let tv_pi = flows.iter().map(|f| tv_slices(&f[n], &pi)).fold(0.0, f64::max);
            out.push(note_for(
                mode,
                CheckReport::le(&format!("thm2.tv_pi.{tag}"), p, tv_pi, basis.s[1] * rn),
            ));
            let factor = basis.s[2] * rho_g(model.theta()) * rn;
            let pair = pair_flows.iter().fold(None, |acc, (tv0, a, b)| {
                worst(
                    acc,
                    CheckReport::le(&format!("thm2.tv_pair.{tag}"), p, tv_slices(&a[n], &b[n]), factor * tv0),
                )
            });
            if let Some(r) = pair {
                out.push(note_for(mode, r));
            }
        }
    }
    out
}

pub fn check_flow_stability(model: &Model, n: usize, trials: usize, seed: u64) -> Vec<CheckReport> {
    at_horizon(check_flow_stability_upto(model, n, trials, seed), n)
}

/// Relaxation time `[1 + log(ρ(g) s3)] / log(1/rate)`; zero rate gives zero,
/// and rates outside `[0, 1)` give `None`.
pub fn relaxation_time(d: usize, theta: f64, rate: f64) -> Option<f64> {
    if rate == 0.0 {
        return Some(0.0);
    }
    if !(rate > 0.0 && rate < 1.0) {
        return None;
    }
    Some((1.0 + (rho_g(theta) * crate::spectral::s_k(d, 3)).ln()) / (1.0 / rate).ln())
}

/// The simplified bound on the relaxation time claimed for `d > 5`.
pub fn relaxation_time_simplified(d: usize, theta: f64) -> f64 {
    let half = sin_frac(1, 2 * (d as i64 + 1));
    (1.0 + theta / 2.0) / (half * half) * (1.0 + (rho_g(theta) * crate::spectral::s_k(d, 3)).ln())
}

/// Longest run of `β(P_n)` the square-sum check will accumulate.
pub const BETA_SUM_CAP: usize = 10_000;

/// Lazily extended sequence `β(P_n)`, where `P_n(x, .) = δ_x Q^n / Q^n(1)(x)`.
pub struct ConditionedBetas {
    step: Matrix,
    power: Matrix,
    betas: Vec<f64>,
}

impl ConditionedBetas {
    pub fn new(model: &Model) -> Self {
        let basis = eigensystem(model);
        let d = model.d();
        ConditionedBetas {
            step: normalized_q(model, &basis),
            power: Matrix::identity(d),
            betas: Vec::new(),
        }
    }

    /// `β(P_n)`.
    pub fn get(&mut self, n: usize) -> f64 {
        while self.betas.len() <= n {
            let sums = self.power.row_sums();
            let inv: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
            self.betas.push(dobrushin_beta(&self.power.scale_rows(&inv)));
            // rescale to keep entries of order one
            let next = self.power.mul(&self.step);
            let scale = max_of(&next.row_sums());
            self.power = next.scale(1.0 / scale);
        }
        self.betas[n]
    }

    /// `Σ_n β(P_n)^2`, stopping once a term drops below `1e-10` or at
    /// [`BETA_SUM_CAP`]; the flag reports whether the terms decayed.
    pub fn square_sum(&mut self) -> (f64, bool) {
        let mut sum = 0.0;
        for n in 0..BETA_SUM_CAP {
            let b = self.get(n);
            sum += b * b;
            if b < 1e-10 {
                return (sum, true);
            }
        }
        (sum, false)
    }
}

/// Stability of the conditioned operators `P_n` for `n = 0..=nmax`: the rate
/// bound, the `e^{-1}` contraction after the relaxation time, the square-sum
/// bound, and the simplified relaxation-time bound.
pub fn check_conditioned_stability_upto(model: &Model, nmax: usize) -> Vec<CheckReport> {
    let (d, theta) = (model.d(), model.theta());
    let basis = eigensystem(model);
    let mut out = Vec::new();
    let modes: Vec<(RateMode, f64, Option<f64>)> = RateMode::BOTH
        .iter()
        .map(|&m| {
            let r = m.rate(&basis);
            (m, r, relaxation_time(d, theta, r))
        })
        .collect();
    let mut betas = ConditionedBetas::new(model);

    for &(mode, rate, varsigma) in &modes {
        let tag = mode.tag();
        for n in 0..=nmax {
            let p = Params::at(model, n);
            out.push(note_for(
                mode,
                CheckReport::le(&format!("thm3.beta.{tag}"), p, betas.get(n), basis.s[1] * powi(rate, n)),
            ));
            let id = format!("thm3.contraction.{tag}");
            match varsigma {
                Some(s) => {
                    let k = n + s.ceil().max(1.0) as usize;
                    let (bk, bn) = (betas.get(k), betas.get(n));
                    out.push(note_for(mode, CheckReport::le(&id, p, bk, bn / E)));
                }
                None => out.push(CheckReport::not_applicable(
                    &id,
                    p,
                    "relaxation time undefined: rate outside [0, 1)",
                )),
            }
        }
        let id = format!("thm3.sum_beta2.{tag}");
        let p = Params::model(model);
        match varsigma {
            Some(s) => {
                let (sum, converged) = betas.square_sum();
                let block = s.ceil().max(1.0);
                let r = CheckReport::le(&id, p, sum, block / (1.0 - (-2.0f64).exp()));
                let r = if converged { r } else { r.with_note("partial sum: terms do not decay") };
                out.push(note_for(mode, r));
            }
            None => out.push(CheckReport::not_applicable(
                &id,
                p,
                "relaxation time undefined: rate outside [0, 1)",
            )),
        }
    }
    let p = Params::model(model);
    let id = "thm3.relaxation_simplified";
    match (d > 5, relaxation_time(d, theta, basis.e1bar)) {
        (false, _) => out.push(CheckReport::not_applicable(id, p, "stated for d > 5 only")),
        (true, None) => out.push(CheckReport::not_applicable(id, p, "relaxation time undefined")),
        (true, Some(s)) => {
            out.push(CheckReport::le(id, p, s, relaxation_time_simplified(d, theta)))
        }
    }
    out
}

pub fn check_conditioned_stability(model: &Model, n: usize) -> Vec<CheckReport> {
    at_horizon(check_conditioned_stability_upto(model, n), n)
}

/// `σ(θ) = sqrt(1+θ) / (sqrt(1+θ) + sqrt(2+θ))`.
pub fn sigma_theta(theta: f64) -> f64 {
    let a = (1.0 + theta).sqrt();
    a / (a + (2.0 + theta).sqrt())
}

/// Printed upper and lower bounds on `Ẽ0 - E0^2`.
pub fn gap_bounds(d: usize, theta: f64) -> (f64, f64) {
    let m = d as i64 + 1;
    let half2 = sin_frac(1, 2 * m).powi(2);
    let c = cos_frac(1, m);
    let pre = 1.0 / (1.0 + theta / 2.0).powi(2);
    let sigma = sigma_theta(theta);
    let upper = pre * (half2 * (theta + 2.0 * c) + 0.5 * sigma);
    let df = d as f64;
    let lower =
        pre * half2 * ((df - 1.0) / (df + 1.0) * theta + 2.0 * c * (1.0 + 2.0 / (df + 1.0) * sigma));
    (upper, lower)
}

/// Spectral gap `Ẽ0 - E0^2` against both printed bounds.
pub fn check_tilde_gap(model: &Model) -> Result<Vec<CheckReport>> {
    let ts = tilde_spectrum(model)?;
    let e0 = eigensystem(model).e0();
    let gap = ts.e0tilde - e0 * e0;
    let (upper, lower) = gap_bounds(model.d(), model.theta());
    let p = Params::model(model);
    Ok(vec![
        CheckReport::le("thm4.gap_nonnegative", p, 0.0, gap),
        CheckReport::le("thm4.upper", p, gap, upper),
        CheckReport::le("thm4.lower", p, lower, gap)
            .note_if_fails("known erratum: printed lower bound exceeds the exact gap"),
    ])
}

/// The growth rate printed as a lower bound for the second-moment ratio.
pub fn printed_growth_rate(d: usize, theta: f64) -> f64 {
    1.0 + 4.0 / 3.0 * sin_frac(1, 2 * (d as i64 + 1)).powi(2) / (2.0 + theta)
}

/// `log(η0 Q̃^n(1) / [η0 Q^n(1)]^2)` for `n = 0..=nmax`.
pub fn log_second_moment_ratio(model: &Model, nmax: usize) -> Result<Vec<f64>> {
    if model.d() < 2 {
        return Err(Error::DegenerateModel);
    }
    let sd = model.soft_decomposition();
    let g2: Vec<f64> = sd.g.iter().map(|g| g * g).collect();
    let tilde = FeynmanKac::new(g2, sd.m.entries.clone()).flow(&model.eta0().weights, nmax)?;
    let soft = FeynmanKac::soft(model).flow(&model.eta0().weights, nmax)?;
    let (lt, ls) = (tilde.log_z(), soft.log_z());
    Ok(lt.iter().zip(&ls).map(|(a, b)| a - 2.0 * b).collect())
}

/// Largest `|λ|/λ0` strictly below one over the spectra of `Q` and `R`;
/// governs how fast the two-step log-slope settles.
fn slope_convergence_base(model: &Model) -> Result<f64> {
    let basis = eigensystem(model);
    let ts = tilde_spectrum(model)?;
    let below = |vals: &[f64], top: f64| {
        vals.iter()
            .map(|v| v.abs() / top)
            .filter(|r| *r < 1.0 - 1e-12)
            .fold(0.0, f64::max)
    };
    Ok(below(&basis.eigenvalues, basis.e0()).max(below(&ts.eigenvalues, ts.e0tilde)))
}

/// Second-moment growth of the reflected importance sampler over `n <= nmax`:
/// the two-sided sandwich with `c = ρ(ψ̃0) ρ(φ0)^2`, the printed lower rate,
/// and the two-step log-slope at `nmax`.
pub fn check_is_degeneracy(model: &Model, nmax: usize) -> Result<Vec<CheckReport>> {
    let logs = log_second_moment_ratio(model, nmax)?;
    let ts = tilde_spectrum(model)?;
    let basis = eigensystem(model);
    let log_rate = (ts.e0tilde / (basis.e0() * basis.e0())).ln();
    let log_c = (ts.rho_psi0 * rho_ratio(basis.phi0())?.powi(2)).ln();
    let log_printed = printed_growth_rate(model.d(), model.theta()).ln();
    let mut lower = None;
    let mut upper = None;
    let mut printed = None;
    for (n, l) in logs.iter().enumerate() {
        let p = Params::at(model, n);
        let centred = l - n as f64 * log_rate;
        lower = worst(lower, CheckReport::le("is_degeneracy.lower", p, -log_c, centred));
        upper = worst(upper, CheckReport::le("is_degeneracy.upper", p, centred, log_c));
        printed = worst(
            printed,
            CheckReport::le("is_degeneracy.printed_lower", p, n as f64 * log_printed - log_c, *l),
        );
    }
    let mut out: Vec<CheckReport> = [lower, upper].into_iter().flatten().collect();
    if let Some(r) = printed {
        out.push(r.note_if_fails(
            "known erratum: printed lower growth rate exceeds the exact rate (log scale)",
        ));
    }
    let p = Params::at(model, nmax);
    if nmax < 2 {
        out.push(CheckReport::not_applicable("is_degeneracy.slope", p, "needs n >= 2"));
    } else {
        let slope = (logs[nmax] - logs[nmax - 2]) / 2.0;
        let q = slope_convergence_base(model)?;
        let r = CheckReport::le("is_degeneracy.slope", p, (slope - log_rate).abs(), 1e-6);
        if powi(q, nmax) <= 1e-8 {
            out.push(r);
        } else {
            let mut na = r.with_note("subdominant modes not yet negligible at this horizon");
            na.verdict = Verdict::NotApplicable;
            out.push(na);
        }
    }
    Ok(out)
}

/// Two-step log-slope of the second-moment ratio at `n`.
pub fn second_moment_slope(model: &Model, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter("slope needs n >= 2"));
    }
    let logs = log_second_moment_ratio(model, n)?;
    Ok((logs[n] - logs[n - 2]) / 2.0)
}

/// `ρ(φ0)` from the closed-form eigenfunction.
pub fn rho_phi0(d: usize) -> f64 {
    rho_ratio(SpectralBasis::new(d, 0.0).phi0()).unwrap_or(1.0)
}

/// The three candidate closed forms for `ρ(φ0)`: `1/sin(a)`, `cot(a)` and
/// `1/(2 sin(a/2))`, with `a = π/(d+1)`.
pub fn rho_phi0_candidates(d: usize) -> (f64, f64, f64) {
    let m = d as i64 + 1;
    let s = sin_frac(1, m);
    (1.0 / s, cos_frac(1, m) / s, 1.0 / (2.0 * sin_frac(1, 2 * m)))
}

/// Uniform bound on `ρ(Q^n(1))` over `n <= nmax`, and `ρ(φ0)` against the
/// printed odd/even displays.
pub fn check_prop_ratio(model: &Model, nmax: usize) -> Vec<CheckReport> {
    let d = model.d();
    let mut out = Vec::new();
    let sup = normalized_survival(model, nmax)
        .iter()
        .map(|v| max_of(v) / min_of(v))
        .fold(0.0, f64::max);
    let p = Params { n: Some(nmax), ..Params::model(model) };
    out.push(CheckReport::le(
        "prop_ratio.sup_rho_qn1",
        p,
        sup,
        rho_g(model.theta()) / sin_a(d),
    ));
    let exact = rho_phi0(d);
    let (odd, even, half) = rho_phi0_candidates(d);
    let p = Params::model(model);
    if d % 2 == 1 {
        out.push(CheckReport::eq("prop_ratio.rho_phi0.odd_display", p, exact, odd));
    } else {
        out.push(
            CheckReport::eq("prop_ratio.rho_phi0.even_display", p, exact, even).note_if_fails(
                "known erratum: the even case equals 1/(2 sin(pi/(2(d+1)))), not cot(pi/(d+1))",
            ),
        );
        out.push(CheckReport::eq("prop_ratio.rho_phi0.even_half_angle", p, exact, half));
    }
    out
}

/// Evenly spaced interior points of `(0, π/2)`.
pub fn taylor_grid(points: usize) -> Vec<f64> {
    let h = PI / 2.0 / (points as f64 + 1.0);
    (1..=points).map(|k| k as f64 * h).collect()
}

/// Every link of the trigonometric inequality chains, worst case over `xs`.
pub fn check_taylor(xs: &[f64]) -> Vec<CheckReport> {
    type Link = (&'static str, fn(f64) -> (f64, f64));
    fn t(x: f64) -> f64 {
        let t = x.tan();
        1.0 + t * t * (4.0 + 3.0 * t * t)
    }
    let links: [Link; 17] = [
        ("taylor.sin.lower", |x| (x - x.powi(3) / 6.0, x.sin())),
        ("taylor.sin.upper", |x| (x.sin(), x - x.powi(3) / 6.0 * x.cos())),
        ("taylor.tan.lower", |x| (x + x.powi(3) / 3.0, x.tan())),
        ("taylor.tan.upper", |x| (x.tan(), x + x.powi(3) / 3.0 * t(x))),
        ("taylor.inv_u.lower", |x| {
            let u = x * x / 6.0;
            (1.0 + u, 1.0 / (1.0 - u))
        }),
        ("taylor.inv_u.identity", |x| {
            let u = x * x / 6.0;
            ((1.0 / (1.0 - u) - (1.0 + u * (1.0 + u / (1.0 - u)))).abs(), 0.0)
        }),
        ("taylor.inv_v.lower", |x| {
            let v = x * x / 3.0;
            (1.0 - v, 1.0 / (1.0 + v))
        }),
        ("taylor.inv_v.identity", |x| {
            let v = x * x / 3.0;
            ((1.0 / (1.0 + v) - (1.0 - v * (1.0 - v / (1.0 + v)))).abs(), 0.0)
        }),
        ("taylor.inv_sin.first", |x| (1.0 / x, (1.0 + x * x / 6.0 * x.cos()) / x)),
        ("taylor.inv_sin.lower", |x| ((1.0 + x * x / 6.0 * x.cos()) / x, 1.0 / x.sin())),
        ("taylor.inv_sin.upper", |x| (1.0 / x.sin(), (1.0 + x * x / (6.0 - x * x)) / x)),
        ("taylor.inv_sin.relaxed", |x| ((1.0 + x * x / (6.0 - x * x)) / x, (1.0 + x * x / 2.0) / x)),
        ("taylor.inv_sin.crude", |x| ((1.0 + x * x / 2.0) / x, 3.0 / x)),
        ("taylor.cot.lower", |x| ((1.0 - x * x / 3.0 * t(x)) / x, 1.0 / x.tan())),
        ("taylor.cot.upper", |x| (1.0 / x.tan(), (1.0 - x * x / (3.0 + x * x)) / x)),
        ("taylor.cot.crude", |x| ((1.0 - x * x / (3.0 + x * x)) / x, 1.0 / x)),
        ("taylor.sin.crude", |x| (x.sin(), x)),
    ];
    links
        .iter()
        .filter_map(|(id, link)| {
            xs.iter().fold(None, |acc, &x| {
                let (lhs, rhs) = link(x);
                let p = Params { x: Some(x), ..Params::default() };
                worst(acc, CheckReport::le(id, p, lhs, rhs))
            })
        })
        .collect()
}

/// Printed estimates for the soft particle variances (report only): the
/// uniform `w` bound, the linear `v` bound and, from equilibrium, the
/// uniform-in-time `w` bound.
pub fn check_var_soft_estimates(engine: &VarianceEngine, n: usize, f: &[f64]) -> Result<Vec<CheckReport>> {
    let model = engine.model();
    let (d, theta) = (model.d(), model.theta());
    let basis = eigensystem(model);
    let s = sin_a(d);
    let p = Params::at(model, n);
    let mut out = Vec::new();
    let w = engine.w_soft(n, f)?;
    let en = engine.eta_f(n, f);
    let spread: f64 = engine.eta_f(n, &f.iter().map(|v| (v - en).powi(2)).collect::<Vec<_>>());
    match relaxation_time(d, theta, basis.e1bar) {
        Some(vs) => {
            let rhs = spread
                + 2.0 / (1.0 + theta) / (1.0 - (-1.0f64).exp()) / s * (vs - 1.0) * oscillation(f);
            out.push(CheckReport::le("var_soft.w_bound", p, w, rhs));
        }
        None => out.push(CheckReport::not_applicable(
            "var_soft.w_bound",
            p,
            "relaxation time undefined: rate outside [0, 1)",
        )),
    }
    let sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let v = engine.v_soft(n, f)?;
    out.push(CheckReport::le("var_soft.v_bound", p, v, (n as f64 + 1.0) * rho_g(theta) / s * sup));

    let pi = quasi_stationary_law(d);
    let id = "var_soft.equilibrium_w_bound";
    if model.eta0().weights.iter().zip(&pi.weights).all(|(a, b)| (a - b).abs() < 1e-12) {
        let m = pi.integrate(f);
        let h2: Vec<f64> = f.iter().map(|v| (v - m).powi(2)).collect();
        let e0 = basis.e0();
        let rhs = pi.integrate(&h2)
            + 2.0 * e0 * (1.0 + e0) / (1.0 + basis.e1bar) * h2.iter().sum::<f64>() / d as f64;
        out.push(CheckReport::le(id, p, w, rhs));
    } else {
        out.push(CheckReport::not_applicable(id, p, "stated for eta0 = pi only"));
    }
    Ok(out)
}

fn is_equilibrium(model: &Model) -> bool {
    let pi = quasi_stationary_law(model.d());
    model.eta0().weights.iter().zip(&pi.weights).all(|(a, b)| (a - b).abs() < 1e-12)
}

/// From equilibrium, `((1-E0) + 1/n) V <= v_n(φ0)/n <= (1 + 1/n) V`, `V = Var_π(φ0)`.
pub fn check_soft_sandwich(engine: &VarianceEngine, n: usize) -> Result<Vec<CheckReport>> {
    let model = engine.model();
    let p = Params::at(model, n);
    if !is_equilibrium(model) || n == 0 {
        let note = "stated for eta0 = pi and n >= 1";
        return Ok(vec![
            CheckReport::not_applicable("soft_sandwich.lower", p, note),
            CheckReport::not_applicable("soft_sandwich.upper", p, note),
        ]);
    }
    let basis = eigensystem(model);
    let (var, _) = equilibrium_constants(model);
    let nf = n as f64;
    let v = engine.v_soft(n, basis.phi0())? / nf;
    Ok(vec![
        CheckReport::le("soft_sandwich.lower", p, ((1.0 - basis.e0()) + 1.0 / nf) * var, v),
        CheckReport::le("soft_sandwich.upper", p, v, (1.0 + 1.0 / nf) * var),
    ])
}

/// Hard-versus-soft variance comparisons at `n >= 1`. `f` lives on `S` and
/// `f_cemetery` extends it to `S ∪ {c}` for the pre-killing comparisons.
/// From equilibrium the chain of identities and the `φ0` closed form are added.
pub fn check_hard_comparisons(
    engine: &VarianceEngine,
    n: usize,
    f: &[f64],
    f_cemetery: f64,
) -> Result<Vec<CheckReport>> {
    let model = engine.model();
    if n == 0 {
        return Err(Error::InvalidParameter("comparisons need n >= 1"));
    }
    let p = Params::at(model, n);
    let q = model.matrix_q().entries;
    let k = model.kernel_k();
    let mut out = Vec::new();

    let qf = q.apply(f);
    out.push(CheckReport::le("hard_cmp.v", p, engine.v_soft(n - 1, &qf)?, engine.v_hard(n, f)?));
    let en = engine.eta_f(n, f);
    let centred: Vec<f64> = f.iter().map(|v| v - en).collect();
    let norm = engine.eta_f(n - 1, &q.row_sums());
    let h: Vec<f64> = q.apply(&centred).iter().map(|v| v / norm).collect();
    out.push(CheckReport::le("hard_cmp.w", p, engine.w_soft(n - 1, &h)?, engine.w_hard(n, f)?));

    let mut fe = f.to_vec();
    fe.push(f_cemetery);
    let kf: Vec<f64> =
        k.within.apply(f).iter().zip(&k.exit).map(|(a, e)| a + e * f_cemetery).collect();
    out.push(CheckReport::le("hard_cmp.v_hat", p, engine.v_soft(n - 1, &kf)?, engine.v_hat_hard(n, &fe)?));
    out.push(CheckReport::le("hard_cmp.w_hat", p, engine.w_soft(n - 1, &kf)?, engine.w_hat_hard(n, &fe)?));

    if is_equilibrium(model) {
        let basis = eigensystem(model);
        let e0 = basis.e0();
        let pi = quasi_stationary_law(model.d());
        let m = pi.integrate(f);
        let c: Vec<f64> = f.iter().map(|v| v - m).collect();
        let w_hard = engine.w_hard(n, f)?;
        let chain = [
            e0 * w_hard,
            engine.v_hard(n, &c)? / e0,
            crate::variance::equilibrium_e0_w_hard(model, n, f),
            engine.w_soft(n - 1, f)?,
            engine.v_soft(n - 1, &c)?,
        ];
        out.push(CheckReport::le("eq_hard.w_dominates", p, e0 * w_hard, w_hard));
        for (i, v) in chain.iter().enumerate().skip(1) {
            out.push(CheckReport::eq(&format!("eq_hard.chain.{i}"), p, chain[0], *v));
        }
        out.push(CheckReport::eq(
            "eq_hard.phi0_closed_form",
            p,
            engine.v_hard(n, basis.phi0())?,
            equilibrium_v_hard_phi0(model, n),
        ));
    }
    Ok(out)
}

/// Catalogue of statements found not to hold as printed. Every entry carries
/// `expected = Fails`.
pub fn erratum_suite() -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    let b = Model::fixture_b();
    let c = Model::fixture_c();

    if let Some(r) = check_flow_stability(&b, 1, 16, crate::rng::DEFAULT_SEED)
        .into_iter()
        .find(|r| r.check_id == "thm2.beta.printed_rate")
    {
        out.push(r);
    }
    for m in [&b, &c] {
        out.extend(check_tilde_gap(m)?.into_iter().filter(|r| r.check_id == "thm4.lower"));
    }
    out.extend(
        check_is_degeneracy(&c, 200)?
            .into_iter()
            .filter(|r| r.check_id == "is_degeneracy.printed_lower"),
    );
    let d4 = Model::uniform(4, 0.0)?;
    out.extend(
        check_prop_ratio(&d4, 0)
            .into_iter()
            .filter(|r| r.check_id == "prop_ratio.rho_phi0.even_display"),
    );
    let printed = printed_equilibrium_v_dp_phi0(3);
    out.push(
        CheckReport::le("erratum.v_dp_phi0_printed", Params::model(&b), 0.0, printed)
            .with_note("known erratum: printed equilibrium value is negative, so not a variance"),
    );
    let dm = Model::fixture_d();
    let engine = VarianceEngine::evolve(&dm, 3)?;
    let f = [1.0, 0.0, 0.0, 0.0];
    let target = engine.survival(2) * engine.w_hard(3, &f)?;
    out.push(
        CheckReport::eq(
            "erratum.w_hard_display_last_line",
            Params::at(&dm, 3),
            engine.w_hard_display_soft(3, &f)?,
            target,
        )
        .with_note("known erratum: the final line of the display holds at equilibrium only"),
    );
    out.extend(crate::combinatorics::erratum_checks());
    Ok(out.into_iter().map(|r| r.expecting(Verdict::Fails)).collect())
}
