//! Closed-form spectrum of `Q`, the Doob transform by the top eigenfunction,
//! quasi-stationary laws, and the spectrum of the symmetrised `Q̃`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{tridiagonal_eigen, Matrix};
use crate::model::{Kernel, KernelKind, Measure, Model};
use crate::trig::{cos_frac, sin_frac};

/// Eigenvalues and `L2(u)`-normalised eigenfunctions of `Q`, plus derived rates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpectralBasis {
    pub d: usize,
    pub theta: f64,
    /// Decreasing: `eigenvalues[0] = E0`.
    pub eigenvalues: Vec<f64>,
    /// `eigenfunctions[i][x]`.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// `E1 / E0` (zero when `d = 1`).
    pub e1bar: f64,
    /// `max_{i >= 1} |E_i| / E0` (zero when `d = 1`).
    pub estar: f64,
    /// `s_1, s_2, s_3`.
    pub s: [f64; 3],
}

impl SpectralBasis {
    pub fn new(d: usize, theta: f64) -> Self {
        let m = d as i64 + 1;
        let eigenvalues: Vec<f64> =
            (1..=m - 1).map(|i| (theta + 2.0 * cos_frac(i, m)) / (theta + 2.0)).collect();
        let scale = (2.0 * d as f64 / (d as f64 + 1.0)).sqrt();
        let eigenfunctions = (1..=m - 1)
            .map(|i| (1..=m - 1).map(|x| scale * sin_frac(i * x, m)).collect())
            .collect();
        let e0 = eigenvalues[0];
        let (e1bar, estar) = if d == 1 {
            (0.0, 0.0)
        } else {
            let star = eigenvalues[1..].iter().map(|e| e.abs()).fold(0.0, f64::max);
            (eigenvalues[1] / e0, star / e0)
        };
        let s = [1, 2, 3].map(|k| s_k(d, k));
        SpectralBasis { d, theta, eigenvalues, eigenfunctions, e1bar, estar, s }
    }

    pub fn e0(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn phi0(&self) -> &[f64] {
        &self.eigenfunctions[0]
    }
}

/// Spectral data of a model.
pub fn eigensystem(model: &Model) -> SpectralBasis {
    SpectralBasis::new(model.d(), model.theta())
}

/// `s_k(d) = sqrt((d+1)/2) sin(pi/(d+1))^{-k}`.
pub fn s_k(d: usize, k: i32) -> f64 {
    let m = d as i64 + 1;
    ((d as f64 + 1.0) / 2.0).sqrt() * sin_frac(1, m).powi(-k)
}

/// The direct trigonometric expression for `E1/E0` (requires `d >= 2`).
pub fn e1bar_closed_form(d: usize, theta: f64) -> f64 {
    let m = 2 * (d as i64 + 1);
    1.0 - 4.0 * sin_frac(3, m) * sin_frac(1, m) / (theta + 2.0 * cos_frac(2, m))
}

/// Quasi-stationary law `pi(x) = tan(a/2) sin(x a)` with `a = pi/(d+1)`.
pub fn quasi_stationary_law(d: usize) -> Measure {
    let m = d as i64 + 1;
    let t = sin_frac(1, 2 * m) / cos_frac(1, 2 * m);
    Measure { weights: (1..m).map(|x| t * sin_frac(x, m)).collect(), cemetery: 0.0 }
}

/// Invariant law of the Doob kernel, `pi_phi(x) = (2/(d+1)) sin(x a)^2`.
pub fn doob_invariant_law(d: usize) -> Measure {
    let m = d as i64 + 1;
    let c = 2.0 / m as f64;
    Measure { weights: (1..m).map(|x| c * sin_frac(x, m).powi(2)).collect(), cemetery: 0.0 }
}

/// `(pi, pi_phi)`.
pub fn quasi_stationary(model: &Model) -> (Measure, Measure) {
    (quasi_stationary_law(model.d()), doob_invariant_law(model.d()))
}

/// `M_phi(x,y) = Q(x,y) phi0(y) / (E0 phi0(x))`.
pub fn doob_kernel(model: &Model) -> Kernel {
    let basis = eigensystem(model);
    let q = model.matrix_q().entries;
    let phi = basis.phi0();
    let e0 = basis.e0();
    let m = if model.d() == 1 {
        Matrix::identity(1)
    } else {
        Matrix::from_fn(model.d(), |x, y| q[(x, y)] * phi[y] / (e0 * phi[x]))
    };
    Kernel { entries: m, kind: KernelKind::Stochastic }
}

/// The same kernel normalised by `Q(phi0)(x)` instead of `E0 phi0(x)`.
pub fn doob_kernel_normalized(model: &Model) -> Kernel {
    let basis = eigensystem(model);
    let q = model.matrix_q().entries;
    let phi = basis.phi0();
    let qphi = q.apply(phi);
    let m = if model.d() == 1 {
        Matrix::identity(1)
    } else {
        Matrix::from_fn(model.d(), |x, y| q[(x, y)] * phi[y] / qphi[x])
    };
    Kernel { entries: m, kind: KernelKind::Stochastic }
}

/// `Q^n` rebuilt from the spectral decomposition.
pub fn reconstruct_qn(model: &Model, n: usize) -> Matrix {
    let b = eigensystem(model);
    let d = model.d();
    let mut out = Matrix::zeros(d);
    for (e, phi) in b.eigenvalues.iter().zip(&b.eigenfunctions) {
        let w = e.powi(n as i32) / d as f64;
        if w == 0.0 {
            continue;
        }
        for x in 0..d {
            for y in 0..d {
                out[(x, y)] += w * phi[x] * phi[y];
            }
        }
    }
    out
}

/// Spectrum of `R = diag(sqrt g) Q diag(sqrt g)`, similar to `Q̃`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TildeSpectrum {
    /// Top eigenvalue of `R` (and of `Q̃`).
    pub e0tilde: f64,
    /// All eigenvalues of `R`, decreasing.
    pub eigenvalues: Vec<f64>,
    /// Positive top eigenvector of `R`, normalised in `L2(u)`.
    pub psi0: Vec<f64>,
    /// `sqrt(g u(1/g)) psi0`, a right eigenvector of `Q̃`.
    pub psi0_tilde: Vec<f64>,
    /// `ρ(psi0_tilde)`.
    pub rho_psi0: f64,
}

/// Eigen-decomposition of the tridiagonal `R` by implicit QL.
pub fn tilde_spectrum(model: &Model) -> Result<TildeSpectrum> {
    let d = model.d();
    if d < 2 {
        return Err(Error::DegenerateModel);
    }
    let g = model.soft_decomposition().g;
    let q = model.matrix_q().entries;
    let sq: Vec<f64> = g.iter().map(|v| v.sqrt()).collect();
    let diag: Vec<f64> = (0..d).map(|x| g[x] * q[(x, x)]).collect();
    let off: Vec<f64> = (0..d - 1).map(|x| sq[x] * q[(x, x + 1)] * sq[x + 1]).collect();
    let eig = tridiagonal_eigen(&diag, &off)?;
    let mut psi0 = eig.vectors[0].clone();
    let sign = if psi0.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let norm = (psi0.iter().map(|v| v * v).sum::<f64>() / d as f64).sqrt();
    for v in &mut psi0 {
        *v *= sign / norm;
    }
    let u_inv_g = g.iter().map(|v| 1.0 / v).sum::<f64>() / d as f64;
    let psi0_tilde: Vec<f64> =
        psi0.iter().zip(&g).map(|(p, gx)| (gx * u_inv_g).sqrt() * p).collect();
    let rho_psi0 = crate::model::rho_ratio(&psi0_tilde)?;
    Ok(TildeSpectrum { e0tilde: eig.values[0], eigenvalues: eig.values, psi0, psi0_tilde, rho_psi0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    #[test]
    fn fixture_spectra() {
        let a = eigensystem(&Model::fixture_a());
        assert!((a.e0() - 0.5).abs() < 1e-15);
        assert!(a.phi0().iter().all(|v| (v - 1.0).abs() < 1e-15));

        let b = eigensystem(&Model::fixture_b());
        assert!((b.e0() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(b.eigenvalues[1], 0.0);
        assert_eq!(b.e1bar, 0.0);
        assert!((b.estar - 1.0).abs() < 1e-15);

        let c = eigensystem(&Model::fixture_c());
        assert!((c.e1bar - (SQRT_2 - 1.0)).abs() < 1e-15);
        assert!((c.s[0] - 2.0).abs() < 1e-14);
        assert!((c.s[1] - 2.0 * SQRT_2).abs() < 1e-14);
        assert!((c.s[2] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn quasi_stationary_fixture_b() {
        let (pi, pi_phi) = quasi_stationary(&Model::fixture_b());
        let expect = [0.292893218813452, 0.414213562373095, 0.292893218813452];
        for (p, e) in pi.weights.iter().zip(expect) {
            assert!((p - e).abs() < 1e-14);
        }
        for (p, e) in pi_phi.weights.iter().zip([0.25, 0.5, 0.25]) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn doob_kernel_fixtures() {
        let b = doob_kernel(&Model::fixture_b()).entries;
        assert!((b[(0, 1)] - 1.0).abs() < 1e-15 && b[(0, 0)] == 0.0);
        assert!((b[(1, 0)] - 0.5).abs() < 1e-15 && (b[(1, 2)] - 0.5).abs() < 1e-15);
        let c = doob_kernel(&Model::fixture_c()).entries;
        assert!((c[(1, 1)] - (SQRT_2 - 1.0)).abs() < 1e-15);
        let a = doob_kernel(&Model::fixture_a()).entries;
        assert!(a.max_abs_diff(&Model::fixture_a().soft_decomposition().m.entries) < 1e-15);
    }

    #[test]
    fn tilde_fixtures() {
        let c = tilde_spectrum(&Model::fixture_c()).unwrap();
        assert!((c.e0tilde - 2.0 / 3.0).abs() < 1e-14);
        let b = tilde_spectrum(&Model::fixture_b()).unwrap();
        assert!((b.e0tilde - 0.5).abs() < 1e-14);
        let d = tilde_spectrum(&Model::fixture_d()).unwrap();
        let expect = (0.5 + (0.25f64 + 0.5).sqrt()) / 2.0;
        assert!((d.e0tilde - expect).abs() < 1e-14);
        assert!(c.psi0.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn d_one_conventions() {
        let b = SpectralBasis::new(1, 0.0);
        assert_eq!(b.eigenvalues, alloc::vec![0.0]);
        assert_eq!(b.phi0(), &[1.0]);
        assert_eq!((b.e1bar, b.estar), (0.0, 0.0));
        assert_eq!(doob_kernel(&Model::uniform(1, 0.0).unwrap()).entries, Matrix::identity(1));
    }
}
