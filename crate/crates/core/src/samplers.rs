//! The four Monte Carlo estimators of `(Z_n, eta_n)` and of the conditioned
//! path law: Doob-twisted importance sampling, reflected-walk importance
//! sampling, and the soft and hard particle samplers.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Measure, Model};
use crate::rng::{sample_index, CumulativeWeights, RngStream};
use crate::spectral::{doob_kernel, eigensystem};

/// Which estimator produced an output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SamplerKind {
    Dp,
    Is,
    Soft,
    Hard,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 4] =
        [SamplerKind::Dp, SamplerKind::Is, SamplerKind::Soft, SamplerKind::Hard];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Dp => "dp",
            SamplerKind::Is => "is",
            SamplerKind::Soft => "soft",
            SamplerKind::Hard => "hard",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dp" => Ok(SamplerKind::Dp),
            "is" => Ok(SamplerKind::Is),
            "soft" => Ok(SamplerKind::Soft),
            "hard" => Ok(SamplerKind::Hard),
            _ => Err(Error::InvalidParameter("sampler must be one of dp, is, soft, hard")),
        }
    }
}

/// A weighted sample of paths in `S^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPaths {
    pub paths: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl WeightedPaths {
    /// Self-normalised average of `f` over the paths; zero when empty.
    pub fn average(&self, f: impl Fn(&[usize]) -> f64) -> f64 {
        let total: f64 = self.weights.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        self.paths.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum::<f64>() / total
    }
}

/// Output of a single sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    pub sampler: SamplerKind,
    pub n: usize,
    pub particles: usize,
    /// Estimate of `Z_n`.
    pub z: f64,
    /// Estimate of `eta_n`; the cemetery Dirac after hard-sampler extinction.
    pub eta: Measure,
    pub paths: Option<WeightedPaths>,
    /// Hard sampler: pre-killing empirical law at time `n`, on `S ∪ {c}`.
    pub eta_hat: Option<Measure>,
    /// Hard sampler: estimate of `Z_{n-1}`, so that `z_prev * eta_hat` estimates `gamma_hat_n`.
    pub z_prev: Option<f64>,
    /// Hard sampler: first time at which no particle was left in `S`.
    pub extinction: Option<usize>,
}

fn empirical(d: usize, states: &[usize]) -> Measure {
    let mut weights = vec![0.0; d];
    let mut cemetery = 0.0;
    let w = 1.0 / states.len() as f64;
    for &s in states {
        if s < d {
            weights[s] += w;
        } else {
            cemetery += w;
        }
    }
    Measure { weights, cemetery }
}

fn weighted_empirical(d: usize, states: &[usize], weights: &[f64]) -> Measure {
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; d];
    if total > 0.0 {
        for (&s, &w) in states.iter().zip(weights) {
            out[s] += w / total;
        }
    }
    Measure { weights: out, cemetery: 0.0 }
}

fn check_particles(particles: usize) -> Result<()> {
    if particles == 0 {
        return Err(Error::InvalidParameter("population size must be at least 1"));
    }
    Ok(())
}

/// Runs `particles` independent chains driven by `kernel` from `init` and
/// returns their paths.
fn independent_chains<R: Rng + ?Sized>(
    kernel: &Matrix,
    init: &[f64],
    n: usize,
    particles: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut paths: Vec<Vec<usize>> = (0..particles)
        .map(|_| {
            let mut p = Vec::with_capacity(n + 1);
            p.push(sample_index(rng, init));
            p
        })
        .collect();
    for _ in 0..n {
        for path in paths.iter_mut() {
            let x = *path.last().expect("nonempty path");
            path.push(sample_index(rng, kernel.row(x)));
        }
    }
    paths
}

/// Importance sampling with the Doob-transformed chain.
pub fn sample_doob_is<R: Rng + ?Sized>(
    model: &Model,
    n: usize,
    particles: usize,
    rng: &mut R,
    keep_paths: bool,
) -> Result<EstimatorOutput> {
    check_particles(particles)?;
    let d = model.d();
    let basis = eigensystem(model);
    let phi = basis.phi0();
    let mphi = doob_kernel(model).entries;
    let init: Vec<f64> = model.eta0().weights.iter().zip(phi).map(|(e, p)| e * p).collect();
    let scale = basis.e0().powi(n as i32) * model.eta0().integrate(phi);
    let paths = independent_chains(&mphi, &init, n, particles, rng);
    let terminal: Vec<usize> = paths.iter().map(|p| p[n]).collect();
    let weights: Vec<f64> = terminal.iter().map(|&y| 1.0 / phi[y]).collect();
    let z = scale * weights.iter().sum::<f64>() / particles as f64;
    Ok(EstimatorOutput {
        sampler: SamplerKind::Dp,
        n,
        particles,
        z,
        eta: weighted_empirical(d, &terminal, &weights),
        paths: keep_paths.then_some(WeightedPaths { paths, weights }),
        eta_hat: None,
        z_prev: None,
        extinction: None,
    })
}

/// Importance sampling with the reflected walk `M` and weights `Π g(Y_p)`.
pub fn sample_reflected_is<R: Rng + ?Sized>(
    model: &Model,
    n: usize,
    particles: usize,
    rng: &mut R,
    keep_paths: bool,
) -> Result<EstimatorOutput> {
    check_particles(particles)?;
    let d = model.d();
    if d < 2 {
        return Err(Error::DegenerateModel);
    }
    let sd = model.soft_decomposition();
    let paths = independent_chains(&sd.m.entries, &model.eta0().weights, n, particles, rng);
    let weights: Vec<f64> =
        paths.iter().map(|p| p[..n].iter().map(|&y| sd.g[y]).product()).collect();
    let terminal: Vec<usize> = paths.iter().map(|p| p[n]).collect();
    let z = weights.iter().sum::<f64>() / particles as f64;
    Ok(EstimatorOutput {
        sampler: SamplerKind::Is,
        n,
        particles,
        z,
        eta: weighted_empirical(d, &terminal, &weights),
        paths: keep_paths.then_some(WeightedPaths { paths, weights }),
        eta_hat: None,
        z_prev: None,
        extinction: None,
    })
}

/// Particle sampler with survival probability `g` and reflected mutation `M`.
///
/// A killed particle is replaced by a copy of a particle drawn with
/// probability proportional to `g` among the whole current population.
pub fn sample_soft_smc<R: Rng + ?Sized>(
    model: &Model,
    n: usize,
    particles: usize,
    rng: &mut R,
    keep_paths: bool,
) -> Result<EstimatorOutput> {
    check_particles(particles)?;
    let d = model.d();
    if d < 2 {
        return Err(Error::DegenerateModel);
    }
    let sd = model.soft_decomposition();
    let g = &sd.g;
    let m = &sd.m.entries;
    let mut states: Vec<usize> =
        (0..particles).map(|_| sample_index(rng, &model.eta0().weights)).collect();
    let mut lines: Vec<Vec<usize>> =
        if keep_paths { states.iter().map(|&s| vec![s]).collect() } else { Vec::new() };
    let mut log_z = 0.0;
    let mut selected = vec![0usize; particles];
    let mut parent = vec![0usize; particles];
    for _ in 0..n {
        let gw: Vec<f64> = states.iter().map(|&s| g[s]).collect();
        log_z += (gw.iter().sum::<f64>() / particles as f64).ln();
        let table = CumulativeWeights::new(&gw);
        for i in 0..particles {
            parent[i] = if rng.gen::<f64>() < gw[i] { i } else { table.sample(rng) };
            selected[i] = states[parent[i]];
        }
        for i in 0..particles {
            states[i] = sample_index(rng, m.row(selected[i]));
        }
        if keep_paths {
            lines = parent
                .iter()
                .zip(&states)
                .map(|(&j, &s)| {
                    let mut l = lines[j].clone();
                    l.push(s);
                    l
                })
                .collect();
        }
    }
    Ok(EstimatorOutput {
        sampler: SamplerKind::Soft,
        n,
        particles,
        z: log_z.exp(),
        eta: empirical(d, &states),
        paths: keep_paths.then(|| WeightedPaths { paths: lines, weights: vec![1.0; particles] }),
        eta_hat: None,
        z_prev: None,
        extinction: None,
    })
}

/// Particle sampler moving by `K` on `S ∪ {c}`; dead particles copy a
/// survivor chosen uniformly.
pub fn sample_hard_smc<R: Rng + ?Sized>(
    model: &Model,
    n: usize,
    particles: usize,
    rng: &mut R,
    keep_paths: bool,
) -> Result<EstimatorOutput> {
    check_particles(particles)?;
    let d = model.d();
    let k = model.kernel_k().absorbing();
    let mut states: Vec<usize> =
        (0..particles).map(|_| sample_index(rng, &model.eta0().weights)).collect();
    let mut lines: Vec<Vec<usize>> =
        if keep_paths { states.iter().map(|&s| vec![s]).collect() } else { Vec::new() };
    let mut z = 1.0;
    let mut z_prev = 1.0;
    let mut extinction = None;
    let mut parent = vec![0usize; particles];
    let mut selected = vec![0usize; particles];
    for p in 0..n {
        let survivors: Vec<usize> = (0..particles).filter(|&i| states[i] < d).collect();
        if survivors.is_empty() {
            extinction = Some(p);
            break;
        }
        for i in 0..particles {
            parent[i] = if states[i] < d {
                i
            } else {
                survivors[(rng.gen::<f64>() * survivors.len() as f64) as usize]
            };
            selected[i] = states[parent[i]];
        }
        for i in 0..particles {
            states[i] = sample_index(rng, k.row(selected[i]));
        }
        if keep_paths {
            lines = parent
                .iter()
                .zip(&states)
                .map(|(&j, &s)| {
                    let mut l = lines[j].clone();
                    l.push(s);
                    l
                })
                .collect();
        }
        let alive = states.iter().filter(|&&s| s < d).count();
        z_prev = z;
        z *= alive as f64 / particles as f64;
    }
    let (eta, eta_hat, paths) = if extinction.is_some() {
        z = 0.0;
        z_prev = 0.0;
        let empty = WeightedPaths { paths: Vec::new(), weights: Vec::new() };
        (Measure::cemetery_dirac(d), Measure::cemetery_dirac(d), keep_paths.then_some(empty))
    } else {
        let alive: Vec<usize> = (0..particles).filter(|&i| states[i] < d).collect();
        if alive.is_empty() && n > 0 {
            extinction = Some(n);
        }
        let eta = if alive.is_empty() {
            Measure::cemetery_dirac(d)
        } else {
            empirical(d, &alive.iter().map(|&i| states[i]).collect::<Vec<_>>())
        };
        let paths = keep_paths.then(|| WeightedPaths {
            paths: alive.iter().map(|&i| lines[i].clone()).collect(),
            weights: vec![1.0; alive.len()],
        });
        (eta, empirical(d, &states), paths)
    };
    Ok(EstimatorOutput {
        sampler: SamplerKind::Hard,
        n,
        particles,
        z,
        eta,
        paths,
        eta_hat: Some(eta_hat),
        z_prev: Some(z_prev),
        extinction,
    })
}

/// Dispatches to the sampler named by `kind`.
pub fn sample<R: Rng + ?Sized>(
    kind: SamplerKind,
    model: &Model,
    n: usize,
    particles: usize,
    rng: &mut R,
    keep_paths: bool,
) -> Result<EstimatorOutput> {
    match kind {
        SamplerKind::Dp => sample_doob_is(model, n, particles, rng, keep_paths),
        SamplerKind::Is => sample_reflected_is(model, n, particles, rng, keep_paths),
        SamplerKind::Soft => sample_soft_smc(model, n, particles, rng, keep_paths),
        SamplerKind::Hard => sample_hard_smc(model, n, particles, rng, keep_paths),
    }
}

/// One row of a replicate table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ReplicateRow {
    pub replicate: u64,
    pub z: f64,
    pub eta_f: f64,
    pub path_f: Option<f64>,
}

/// Functional of an ancestral line.
pub type PathFunctional<'a> = dyn Fn(&[usize]) -> f64 + Sync + 'a;

/// Fixed inputs of a replicate study.
#[derive(Clone, Copy)]
pub struct ReplicatePlan<'a> {
    pub model: &'a Model,
    pub sampler: SamplerKind,
    pub n: usize,
    pub particles: usize,
    pub seed: u64,
    pub f: &'a [f64],
    pub f_path: Option<&'a PathFunctional<'a>>,
}

impl ReplicatePlan<'_> {
    /// Replicate `r`, drawn from stream `(seed, r)`.
    pub fn run_one(&self, r: u64) -> Result<ReplicateRow> {
        if self.f.len() != self.model.d() {
            return Err(Error::Dimension { expected: self.model.d(), got: self.f.len() });
        }
        let mut rng = RngStream::new(self.seed, r);
        let out =
            sample(self.sampler, self.model, self.n, self.particles, &mut rng, self.f_path.is_some())?;
        let path_f = match (self.f_path, &out.paths) {
            (Some(fp), Some(paths)) => Some(paths.average(fp)),
            _ => None,
        };
        Ok(ReplicateRow { replicate: r, z: out.z, eta_f: out.eta.integrate(self.f), path_f })
    }
}

/// Replicates `0..replicates`, in order.
pub fn run_replicates(plan: &ReplicatePlan<'_>, replicates: usize) -> Result<Vec<ReplicateRow>> {
    if replicates == 0 {
        return Err(Error::TooFewReplicates { got: 0, need: 1 });
    }
    (0..replicates as u64).map(|r| plan.run_one(r)).collect()
}
