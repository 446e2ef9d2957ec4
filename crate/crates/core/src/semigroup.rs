//! Exact Feynman-Kac flows: normalised flows with and without the cemetery,
//! normalising constants, normalised semigroups, conditioned operators,
//! absorption-time laws and small path measures.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::{dobrushin_beta, rho_ratio, tv_distance, Kernel, KernelKind, Measure, Model};

/// A Feynman-Kac model given by a potential `G` and a Markov mutation `M`;
/// its unnormalised semigroup is `Q = diag(G) M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeynmanKac {
    pub potential: Vec<f64>,
    pub mutation: Matrix,
    pub q: Matrix,
}

impl FeynmanKac {
    pub fn new(potential: Vec<f64>, mutation: Matrix) -> Self {
        let q = mutation.scale_rows(&potential);
        FeynmanKac { potential, mutation, q }
    }

    /// Soft killing on `S`: potential `g`, reflected mutation `M`.
    pub fn soft(model: &Model) -> Self {
        let sd = model.soft_decomposition();
        Self::new(sd.g, sd.m.entries)
    }

    /// Hard killing on `S ∪ {c}`: potential `1_S`, walk kernel with an
    /// absorbing cemetery. The semigroup is `Q̂`.
    pub fn hard(model: &Model) -> Self {
        let d = model.d();
        let mut potential = vec![1.0; d + 1];
        potential[d] = 0.0;
        Self::new(potential, model.kernel_k().absorbing())
    }

    pub fn dim(&self) -> usize {
        self.potential.len()
    }

    /// One step of `eta -> Ψ_G(eta) M`, returning the new law and `eta(G)`.
    pub fn step(&self, eta: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mass = dot(eta, &self.potential);
        if !(mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        let weighted: Vec<f64> =
            eta.iter().zip(&self.potential).map(|(e, g)| e * g / mass).collect();
        Ok((self.mutation.act_left(&weighted), mass))
    }

    /// Normalised flow `eta_0, ..., eta_n`.
    pub fn flow(&self, eta0: &[f64], n: usize) -> Result<FkFlow> {
        if eta0.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: eta0.len() });
        }
        let mut etas = Vec::with_capacity(n + 1);
        let mut masses = Vec::with_capacity(n);
        etas.push(eta0.to_vec());
        for p in 0..n {
            let (next, mass) = self.step(&etas[p])?;
            masses.push(mass);
            etas.push(next);
        }
        Ok(FkFlow { etas, masses })
    }

    /// `Q_{p,n} f` for every `p = 0..=n`, by backward recursion
    /// `Q_{p,n} = Q Q_{p+1,n} / eta_p(G)`.
    pub fn backward(&self, flow: &FkFlow, n: usize, f: &[f64]) -> Vec<Vec<f64>> {
        let mut hs = vec![Vec::new(); n + 1];
        hs[n] = f.to_vec();
        for p in (0..n).rev() {
            let qh = self.q.apply(&hs[p + 1]);
            hs[p] = qh.iter().map(|v| v / flow.masses[p]).collect();
        }
        hs
    }
}

/// Output of [`FeynmanKac::flow`].
#[derive(Debug, Clone, PartialEq)]
pub struct FkFlow {
    /// `etas[p]` for `p = 0..=n`.
    pub etas: Vec<Vec<f64>>,
    /// `masses[p] = eta_p(G)` for `p = 0..n`.
    pub masses: Vec<f64>,
}

impl FkFlow {
    pub fn horizon(&self) -> usize {
        self.masses.len()
    }

    /// `log Z_p` for `p = 0..=n`.
    pub fn log_z(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.masses.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for m in &self.masses {
            acc += m.ln();
            out.push(acc);
        }
        out
    }
}

/// Both normalised flows of a model together with `Z_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    /// Laws conditioned on survival, on `S`.
    pub etas: Vec<Measure>,
    /// Pre-killing laws on `S ∪ {c}`, with `eta_hats[0] = eta_0`.
    pub eta_hats: Vec<Measure>,
    /// `log Z_p`, a running sum of `log eta_p(g)`.
    pub log_z: Vec<f64>,
    /// `Z_p = exp(log Z_p)`.
    pub z: Vec<f64>,
    /// Unnormalised laws `gamma_p = Z_p eta_p`.
    pub gammas: Vec<Measure>,
    /// `eta_p(g)` for `p = 0..=n`.
    pub survival: Vec<f64>,
}

impl FlowTrace {
    pub fn horizon(&self) -> usize {
        self.etas.len() - 1
    }
}

/// Evolves both flows up to horizon `n`.
pub fn evolve(model: &Model, n: usize) -> Result<FlowTrace> {
    let soft = FeynmanKac::soft(model);
    let hard = FeynmanKac::hard(model);
    let sflow = soft.flow(&model.eta0().weights, n + 1)?;
    let hflow = hard.flow(&model.eta0().extended(), n)?;
    let log_z: Vec<f64> = sflow.log_z()[..=n].to_vec();
    let z: Vec<f64> = log_z.iter().map(|l| l.exp()).collect();
    let etas: Vec<Measure> =
        sflow.etas[..=n].iter().map(|e| Measure { weights: e.clone(), cemetery: 0.0 }).collect();
    let gammas = etas
        .iter()
        .zip(&z)
        .map(|(e, zp)| Measure { weights: e.weights.iter().map(|w| w * zp).collect(), cemetery: 0.0 })
        .collect();
    Ok(FlowTrace {
        etas,
        eta_hats: hflow.etas.iter().map(|e| Measure::from_extended(e)).collect(),
        log_z,
        z,
        gammas,
        survival: sflow.masses[..=n].to_vec(),
    })
}

/// `Q_{p,n} = Q^{n-p} / eta_p Q^{n-p}(1)`.
pub fn normalized_semigroup(model: &Model, p: usize, n: usize, eta_p: &Measure) -> Result<Kernel> {
    if p > n {
        return Err(Error::InvalidParameter("p must not exceed n"));
    }
    let qk = model.matrix_q().entries.pow(n - p);
    let mass = eta_p.integrate(&qk.row_sums());
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(Kernel { entries: qk.scale(1.0 / mass), kind: KernelKind::Generic })
}

/// `Q̂_{p,n} = Q̂^{n-p} / eta_hat_p Q̂^{n-p}(1)` on `S ∪ {c}`.
pub fn normalized_semigroup_hat(
    model: &Model,
    p: usize,
    n: usize,
    eta_hat_p: &Measure,
) -> Result<Matrix> {
    if p > n {
        return Err(Error::InvalidParameter("p must not exceed n"));
    }
    let qk = model.matrix_qhat().killed().pow(n - p);
    let mass = dot(&eta_hat_p.extended(), &qk.row_sums());
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    Ok(qk.scale(1.0 / mass))
}

/// `P_n(x, .) = δ_x Q^n / Q^n(1)(x)`.
pub fn conditioned_operator_pn(model: &Model, n: usize) -> Result<Kernel> {
    let qn = model.matrix_q().entries.pow(n);
    let sums = qn.row_sums();
    if sums.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::ZeroMass);
    }
    let inv: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
    Ok(Kernel { entries: qn.scale_rows(&inv), kind: KernelKind::Stochastic })
}

/// Laws of the hard exit time `T_X` and the soft killing time `T_Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionLaw {
    /// `P(T_X = k)`, `k = 0..=nmax`.
    pub hard: Vec<f64>,
    /// `P(T_X > nmax)`.
    pub hard_survival: f64,
    /// `P(T_Y = k)`, `k = 0..=nmax`.
    pub soft: Vec<f64>,
    /// `P(T_Y > nmax)`.
    pub soft_survival: f64,
}

pub fn absorption_law(model: &Model, nmax: usize) -> Result<AbsorptionLaw> {
    let flow = FeynmanKac::soft(model).flow(&model.eta0().weights, nmax + 1)?;
    let z: Vec<f64> = flow.log_z().iter().map(|l| l.exp()).collect();
    let mut hard = vec![0.0; nmax + 1];
    for k in 1..=nmax {
        hard[k] = z[k - 1] * (1.0 - flow.masses[k - 1]);
    }
    let soft = (0..=nmax).map(|k| z[k] * (1.0 - flow.masses[k])).collect();
    Ok(AbsorptionLaw { hard, hard_survival: z[nmax], soft, soft_survival: z[nmax + 1] })
}

/// Largest number of paths [`exact_path_measure`] will enumerate.
pub const PATH_LIMIT: u128 = 10_000_000;

/// Atoms of the unnormalised path measure `η0(y0) Π M(y_p, y_{p+1}) Π_{p<n} g(y_p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMeasure {
    pub n: usize,
    /// Paths with positive weight, in lexicographic order.
    pub atoms: Vec<(Vec<usize>, f64)>,
    /// Total weight, equal to `Z_n`.
    pub normalization: f64,
}

pub fn exact_path_measure(model: &Model, n: usize) -> Result<PathMeasure> {
    let d = model.d();
    let requested = (d as u128).checked_pow(n as u32 + 1).unwrap_or(u128::MAX);
    if requested > PATH_LIMIT {
        return Err(Error::TooLarge { requested, limit: PATH_LIMIT });
    }
    let sd = model.soft_decomposition();
    let mut atoms = Vec::new();
    let mut path = Vec::with_capacity(n + 1);
    for y0 in 0..d {
        let w = model.eta0().weights[y0];
        if w > 0.0 {
            path.push(y0);
            extend_paths(&sd.g, &sd.m.entries, n, w, &mut path, &mut atoms);
            path.pop();
        }
    }
    let normalization = atoms.iter().map(|(_, w)| w).sum();
    Ok(PathMeasure { n, atoms, normalization })
}

fn extend_paths(
    g: &[f64],
    m: &Matrix,
    n: usize,
    weight: f64,
    path: &mut Vec<usize>,
    atoms: &mut Vec<(Vec<usize>, f64)>,
) {
    if path.len() == n + 1 {
        atoms.push((path.clone(), weight));
        return;
    }
    let x = *path.last().expect("nonempty path");
    for y in 0..g.len() {
        let w = weight * g[x] * m[(x, y)];
        if w > 0.0 {
            path.push(y);
            extend_paths(g, m, n, w, path, atoms);
            path.pop();
        }
    }
}

/// `TV(Φ^n μ1, Φ^n μ2)` and the bound `ρ(Q^n 1) β(P_n) TV(μ1, μ2)`.
pub fn lipschitz_bound(model: &Model, n: usize, mu1: &Measure, mu2: &Measure) -> Result<(f64, f64)> {
    let fk = FeynmanKac::soft(model);
    let a = fk.flow(&mu1.weights, n)?;
    let b = fk.flow(&mu2.weights, n)?;
    let lhs = crate::model::tv_slices(&a.etas[n], &b.etas[n]);
    let qn1 = model.matrix_q().entries.pow(n).row_sums();
    let beta = dobrushin_beta(&conditioned_operator_pn(model, n)?.entries);
    Ok((lhs, rho_ratio(&qn1)? * beta * tv_distance(mu1, mu2)))
}
