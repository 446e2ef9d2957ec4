//! Dense row-major matrices and a symmetric tridiagonal eigensolver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Square dense matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from a closure over `(row, column)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// `n`-fold product by repeated multiplication.
    pub fn pow(&self, n: usize) -> Matrix {
        let mut out = Matrix::identity(self.dim);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Every power `A^0, ..., A^n`.
    pub fn powers(&self, n: usize) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(Matrix::identity(self.dim));
        for k in 0..n {
            let next = out[k].mul(self);
            out.push(next);
        }
        out
    }

    /// Right action on a function: `(A f)(x) = sum_y A(x,y) f(y)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.dim);
        (0..self.dim).map(|i| dot(self.row(i), f)).collect()
    }

    /// Left action on a measure: `(mu A)(y) = sum_x mu(x) A(x,y)`.
    pub fn act_left(&self, mu: &[f64]) -> Vec<f64> {
        assert_eq!(mu.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for (i, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += m * a;
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(j, i)])
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|a| a * c).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// `diag(v) * self`.
    pub fn scale_rows(&self, v: &[f64]) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| v[i] * self[(i, j)])
    }

    /// `self * diag(v)`.
    pub fn scale_cols(&self, v: &[f64]) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self[(i, j)] * v[j])
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.transpose()) <= tol
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Iteration cap per eigenvalue for [`tridiagonal_eigen`].
pub const QL_MAX_ITER: usize = 30;

/// Eigen-decomposition of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    /// Eigenvalues in decreasing order.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit-norm eigenvector of `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Implicit QL with Wilkinson shifts on the tridiagonal matrix with main
/// diagonal `diag` and off-diagonal `off` (`off.len() + 1 == diag.len()`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<TridiagonalEigen> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::Dimension { expected: n.saturating_sub(1), got: off.len() });
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    let mut z = Matrix::identity(n);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            if iter == QL_MAX_ITER {
                return Err(Error::ConvergenceFailure { iterations: iter });
            }
            iter += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zf = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * zf;
                    z[(k, i)] = c * z[(k, i)] - s * zf;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| z[(i, k)]).collect()).collect();
    Ok(TridiagonalEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ql_recovers_known_spectrum() {
        // second-difference matrix: eigenvalues 2 - 2 cos(k pi / (n+1))
        let n = 7;
        let eig = tridiagonal_eigen(&[2.0; 7], &[-1.0; 6]).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            let j = (n - k) as f64;
            let expect = 2.0 - 2.0 * (j * core::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - expect).abs() < 1e-13);
        }
        for (lambda, v) in eig.values.iter().zip(&eig.vectors) {
            for i in 0..n {
                let mut tv = 2.0 * v[i];
                if i > 0 {
                    tv -= v[i - 1];
                }
                if i + 1 < n {
                    tv -= v[i + 1];
                }
                assert!((tv - lambda * v[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn one_by_one() {
        let eig = tridiagonal_eigen(&[0.25], &[]).unwrap();
        assert_eq!(eig.values, vec![0.25]);
        assert_eq!(eig.vectors, vec![vec![1.0]]);
    }

    #[test]
    fn powers_match_pow() {
        let a = Matrix::from_fn(3, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let ps = a.powers(4);
        assert!(ps[4].max_abs_diff(&a.pow(4)) < 1e-15);
        assert_eq!(ps[0], Matrix::identity(3));
    }
}
