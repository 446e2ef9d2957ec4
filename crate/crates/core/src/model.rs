//! The lazy walk on `S = {1, ..., d}` killed on leaving `S`, its kernels, and
//! measure-level utilities (Boltzmann-Gibbs transform, total variation,
//! Dobrushin coefficient, oscillation ratio).
//!
//! States are 0-based: index `x` stands for the lattice site `x + 1`.
//! Where a cemetery coordinate is needed it has index `d`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Tolerance for "sums to one" checks on measures and kernel rows.
pub const MASS_TOL: f64 = 1e-12;

/// Nonnegative weights on `S` plus a cemetery mass.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Measure {
    pub weights: Vec<f64>,
    pub cemetery: f64,
}

impl Measure {
    pub fn new(weights: Vec<f64>, cemetery: f64) -> Result<Self> {
        if weights.iter().chain([&cemetery]).any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidMeasure("weights must be finite and nonnegative"));
        }
        Ok(Measure { weights, cemetery })
    }

    /// A probability measure on `S` given by `weights`.
    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(weights, 0.0)?;
        if (m.mass() - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure("probability weights must sum to 1"));
        }
        Ok(m)
    }

    /// Normalises arbitrary nonnegative weights on `S`.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let m = Self::new(weights, 0.0)?;
        let total = m.mass();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Measure { weights: m.weights.iter().map(|w| w / total).collect(), cemetery: 0.0 })
    }

    pub fn uniform(d: usize) -> Self {
        Measure { weights: vec![1.0 / d as f64; d], cemetery: 0.0 }
    }

    pub fn dirac(d: usize, x: usize) -> Self {
        let mut weights = vec![0.0; d];
        weights[x] = 1.0;
        Measure { weights, cemetery: 0.0 }
    }

    /// Dirac mass at the cemetery.
    pub fn cemetery_dirac(d: usize) -> Self {
        Measure { weights: vec![0.0; d], cemetery: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Total mass including the cemetery.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.cemetery
    }

    pub fn is_probability(&self) -> bool {
        (self.mass() - 1.0).abs() <= MASS_TOL
    }

    /// `mu(f)` for `f` on `S`; functions vanish on the cemetery.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Weights on `S ∪ {c}` with the cemetery last.
    pub fn extended(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.cemetery);
        v
    }

    pub fn from_extended(v: &[f64]) -> Self {
        let d = v.len() - 1;
        Measure { weights: v[..d].to_vec(), cemetery: v[d] }
    }
}

/// Row-sum class of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum KernelKind {
    Stochastic,
    Substochastic,
    Generic,
}

/// A `d × d` kernel on `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub entries: Matrix,
    pub kind: KernelKind,
}

impl Kernel {
    /// Validates the row-sum class before wrapping.
    pub fn new(entries: Matrix, kind: KernelKind) -> Result<Self> {
        let n = entries.dim();
        let nonneg = (0..n).all(|i| entries.row(i).iter().all(|a| *a >= 0.0));
        let sums = entries.row_sums();
        let ok = match kind {
            KernelKind::Stochastic => nonneg && sums.iter().all(|s| (s - 1.0).abs() <= MASS_TOL),
            KernelKind::Substochastic => nonneg && sums.iter().all(|s| *s <= 1.0 + MASS_TOL),
            KernelKind::Generic => true,
        };
        if !ok {
            return Err(Error::InvalidParameter("kernel rows violate its declared kind"));
        }
        Ok(Kernel { entries, kind })
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }
}

/// Kernel on `S` with the mass leaving `S` recorded per row.
///
/// Serves both for the walk kernel `K` restricted to rows in `S` and for the
/// killed kernel `Q̂` on `S ∪ {c}` (whose cemetery row vanishes).
#[derive(Debug, Clone, PartialEq)]
pub struct KillingKernel {
    pub within: Matrix,
    pub exit: Vec<f64>,
}

impl KillingKernel {
    /// Extension to `S ∪ {c}` with the cemetery row set to `cemetery_row`.
    fn extend(&self, cemetery_row: f64) -> Matrix {
        let d = self.within.dim();
        let mut m = Matrix::zeros(d + 1);
        for x in 0..d {
            for y in 0..d {
                m[(x, y)] = self.within[(x, y)];
            }
            m[(x, d)] = self.exit[x];
        }
        m[(d, d)] = cemetery_row;
        m
    }

    /// Markov kernel on `S ∪ {c}` with an absorbing cemetery.
    pub fn absorbing(&self) -> Matrix {
        self.extend(1.0)
    }

    /// Substochastic kernel on `S ∪ {c}` with a null cemetery row.
    pub fn killed(&self) -> Matrix {
        self.extend(0.0)
    }
}

/// `Q = diag(g) M` with `M` stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftDecomposition {
    pub g: Vec<f64>,
    pub m: Kernel,
    /// Set for `d = 1`, where the decomposition is forced to `M = [1]`.
    pub degenerate: bool,
}

/// The walk with laziness `theta` on `d` sites and its initial law.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    d: usize,
    theta: f64,
    eta0: Measure,
}

impl Model {
    pub fn new(d: usize, theta: f64, eta0: Measure) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1"));
        }
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::InvalidParameter("theta must be finite and nonnegative"));
        }
        if eta0.dim() != d {
            return Err(Error::Dimension { expected: d, got: eta0.dim() });
        }
        if eta0.cemetery != 0.0 || !eta0.is_probability() {
            return Err(Error::InvalidMeasure("initial law must be a probability on S"));
        }
        Ok(Model { d, theta, eta0 })
    }

    pub fn uniform(d: usize, theta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1"));
        }
        Self::new(d, theta, Measure::uniform(d))
    }

    /// Started from the quasi-stationary law `pi`.
    pub fn equilibrium(d: usize, theta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("d must be at least 1"));
        }
        let pi = crate::spectral::quasi_stationary_law(d);
        Self::new(d, theta, pi)
    }

    pub fn with_eta0(&self, eta0: Measure) -> Result<Self> {
        Self::new(self.d, self.theta, eta0)
    }

    /// `d = 2`, `θ = 0`, uniform start.
    pub fn fixture_a() -> Self {
        Self::uniform(2, 0.0).expect("valid fixture")
    }

    /// `d = 3`, `θ = 0`, equilibrium start.
    pub fn fixture_b() -> Self {
        Self::equilibrium(3, 0.0).expect("valid fixture")
    }

    /// `d = 3`, `θ = 1`, equilibrium start.
    pub fn fixture_c() -> Self {
        Self::equilibrium(3, 1.0).expect("valid fixture")
    }

    /// `d = 4`, `θ = 0`, uniform start.
    pub fn fixture_d() -> Self {
        Self::uniform(4, 0.0).expect("valid fixture")
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eta0(&self) -> &Measure {
        &self.eta0
    }

    fn step_prob(&self) -> f64 {
        1.0 / (2.0 + self.theta)
    }

    fn hold_prob(&self) -> f64 {
        self.theta / (2.0 + self.theta)
    }

    /// Walk kernel `K` on rows in `S`, with exit mass per row.
    pub fn kernel_k(&self) -> KillingKernel {
        let d = self.d;
        let (p, h) = (self.step_prob(), self.hold_prob());
        let within = Matrix::from_fn(d, |x, y| {
            if x == y {
                h
            } else if x.abs_diff(y) == 1 {
                p
            } else {
                0.0
            }
        });
        let exit = (0..d)
            .map(|x| p * (usize::from(x == 0) + usize::from(x + 1 == d)) as f64)
            .collect();
        KillingKernel { within, exit }
    }

    /// `Q(x,y) = K(x,y) 1_S(y)`, symmetric and substochastic.
    pub fn matrix_q(&self) -> Kernel {
        Kernel { entries: self.kernel_k().within, kind: KernelKind::Substochastic }
    }

    /// `Q̂(x,y) = 1_S(x) K(x,y)` on `S ∪ {c}`; identical data to [`Self::kernel_k`].
    pub fn matrix_qhat(&self) -> KillingKernel {
        self.kernel_k()
    }

    /// Survival potential `g = Q(1)` and reflected kernel `M` with `Q = diag(g) M`.
    pub fn soft_decomposition(&self) -> SoftDecomposition {
        let q = self.matrix_q().entries;
        let g = q.row_sums();
        if self.d == 1 {
            return SoftDecomposition {
                g,
                m: Kernel { entries: Matrix::identity(1), kind: KernelKind::Stochastic },
                degenerate: true,
            };
        }
        let m = Matrix::from_fn(self.d, |x, y| q[(x, y)] / g[x]);
        SoftDecomposition {
            g,
            m: Kernel { entries: m, kind: KernelKind::Stochastic },
            degenerate: false,
        }
    }

    /// `Q̃ = diag(g²) M = diag(g) Q`.
    pub fn matrix_qtilde(&self) -> Result<Kernel> {
        if self.d < 2 {
            return Err(Error::DegenerateModel);
        }
        let sd = self.soft_decomposition();
        let g2: Vec<f64> = sd.g.iter().map(|g| g * g).collect();
        Ok(Kernel { entries: sd.m.entries.scale_rows(&g2), kind: KernelKind::Generic })
    }
}

/// `Ψ_g(μ)(x) = g(x) μ(x) / μ(g)`.
///
/// `g` has length `d` (vanishing on the cemetery) or `d + 1` (cemetery last).
pub fn boltzmann_gibbs(g: &[f64], mu: &Measure) -> Result<Measure> {
    let d = mu.dim();
    if g.len() != d && g.len() != d + 1 {
        return Err(Error::Dimension { expected: d, got: g.len() });
    }
    let gc = g.get(d).copied().unwrap_or(0.0);
    let weights: Vec<f64> = mu.weights.iter().zip(g).map(|(m, gx)| m * gx).collect();
    let cemetery = mu.cemetery * gc;
    let total = weights.iter().sum::<f64>() + cemetery;
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(Measure { weights: weights.iter().map(|w| w / total).collect(), cemetery: cemetery / total })
}

/// Half the L1 distance, the cemetery counted as one more point.
pub fn tv_distance(mu1: &Measure, mu2: &Measure) -> f64 {
    tv_slices(&mu1.extended(), &mu2.extended())
}

pub(crate) fn tv_slices(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Dobrushin coefficient: the largest total variation between two rows.
pub fn dobrushin_beta(m: &Matrix) -> f64 {
    let n = m.dim();
    let mut beta: f64 = 0.0;
    for x in 0..n {
        for y in x + 1..n {
            beta = beta.max(tv_slices(m.row(x), m.row(y)));
        }
    }
    beta
}

/// `ρ(f) = max f / min f` for strictly positive `f`.
pub fn rho_ratio(f: &[f64]) -> Result<f64> {
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if f.is_empty() || !(min > 0.0) {
        return Err(Error::NonPositive);
    }
    Ok(max / min)
}

/// `max f - min f`.
pub fn oscillation(f: &[f64]) -> f64 {
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max - min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_kernels() {
        let a = Model::fixture_a().kernel_k();
        assert_eq!(a.within[(0, 1)], 0.5);
        assert_eq!(a.within[(0, 0)], 0.0);
        assert_eq!(a.exit[0], 0.5);

        let c = Model::fixture_c().kernel_k();
        assert!((c.within[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c.exit[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(Model::fixture_b().kernel_k().exit[1], 0.0);
    }

    #[test]
    fn decomposition_boundary_values() {
        let b = Model::fixture_b().soft_decomposition();
        assert_eq!(b.g, vec![0.5, 1.0, 0.5]);
        assert_eq!(b.m.entries[(0, 0)], 0.0);
        assert_eq!(b.m.entries[(0, 1)], 1.0);

        let c = Model::fixture_c().soft_decomposition();
        assert!((c.g[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.m.entries[(0, 0)] - 0.5).abs() < 1e-15);

        let one = Model::uniform(1, 1.0).unwrap().soft_decomposition();
        assert!(one.degenerate);
        assert!((one.g[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(one.m.entries, Matrix::identity(1));
    }

    #[test]
    fn qtilde_fixture_b() {
        let qt = Model::fixture_b().matrix_qtilde().unwrap().entries;
        let expect = [[0.0, 0.25, 0.0], [0.5, 0.0, 0.5], [0.0, 0.25, 0.0]];
        for (x, row) in expect.iter().enumerate() {
            for (y, v) in row.iter().enumerate() {
                assert!((qt[(x, y)] - v).abs() < 1e-15);
            }
        }
        assert_eq!(Model::uniform(1, 1.0).unwrap().matrix_qtilde(), Err(Error::DegenerateModel));
    }

    #[test]
    fn gibbs_and_distances() {
        let c = Model::uniform(3, 1.0).unwrap();
        let g = c.soft_decomposition().g;
        let psi = boltzmann_gibbs(&g, c.eta0()).unwrap();
        for (w, e) in psi.weights.iter().zip([2.0 / 7.0, 3.0 / 7.0, 2.0 / 7.0]) {
            assert!((w - e).abs() < 1e-15);
        }
        assert_eq!(boltzmann_gibbs(&[0.0, 1.0], &Measure::dirac(2, 0)), Err(Error::ZeroMass));
        assert_eq!(tv_distance(&Measure::dirac(3, 0), &Measure::dirac(3, 1)), 1.0);
        assert_eq!(dobrushin_beta(&Matrix::from_fn(2, |i, j| (i != j) as u8 as f64)), 1.0);
        assert_eq!(dobrushin_beta(&Matrix::from_fn(3, |_, _| 1.0 / 3.0)), 0.0);
        assert_eq!(rho_ratio(&[1.0, 0.0]), Err(Error::NonPositive));
        assert!((rho_ratio(&g).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn model_validation() {
        assert!(Model::uniform(0, 1.0).is_err());
        assert!(Model::uniform(3, -1.0).is_err());
        assert!(Model::new(2, 0.0, Measure::new(vec![0.5, 0.4], 0.0).unwrap()).is_err());
        assert!(Model::new(2, 0.0, Measure::uniform(3)).is_err());
    }
}
