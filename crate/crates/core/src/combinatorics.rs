//! Exact path counts for the walk with `θ = 0` and their spectral and
//! binomial identities.

use alloc::vec::Vec;

use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_bigint::{BigInt, BigUint};

#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::bounds::{CheckReport, Params};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Kernel, KernelKind, Model};
use crate::trig::{cos_frac, sin_frac};

/// `C_n(x, y)`: number of nearest-neighbour paths of length `n` from `x` to
/// `y` that stay in `{0, ..., d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCountTable {
    pub d: usize,
    pub nmax: usize,
    /// `counts[n][x][y]`.
    pub counts: Vec<Vec<Vec<BigUint>>>,
    /// `row_sums[n][x] = Σ_y C_n(x, y)`.
    pub row_sums: Vec<Vec<BigUint>>,
}

impl PathCountTable {
    pub fn count(&self, n: usize, x: usize, y: usize) -> &BigUint {
        &self.counts[n][x][y]
    }

    pub fn row_sum(&self, n: usize, x: usize) -> &BigUint {
        &self.row_sums[n][x]
    }
}

/// Fills the table by `C_{n+1}(x, y) = C_n(x, y-1) + C_n(x, y+1)`.
pub fn count_paths(d: usize, nmax: usize) -> Result<PathCountTable> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1"));
    }
    let mut counts = Vec::with_capacity(nmax + 1);
    let identity: Vec<Vec<BigUint>> = (0..d)
        .map(|x| (0..d).map(|y| BigUint::from((x == y) as u8)).collect())
        .collect();
    counts.push(identity);
    for n in 0..nmax {
        let prev: &Vec<Vec<BigUint>> = &counts[n];
        let next: Vec<Vec<BigUint>> = (0..d)
            .map(|x| {
                (0..d)
                    .map(|y| {
                        let mut c = BigUint::zero();
                        if y > 0 {
                            c += &prev[x][y - 1];
                        }
                        if y + 1 < d {
                            c += &prev[x][y + 1];
                        }
                        c
                    })
                    .collect()
            })
            .collect();
        counts.push(next);
    }
    let row_sums = counts
        .iter()
        .map(|t| t.iter().map(|row| row.iter().sum()).collect())
        .collect();
    Ok(PathCountTable { d, nmax, counts, row_sums })
}

/// `Q_0^n(x, y) = (2/(d+1)) Σ_i cos^n(i a) sin(i x a) sin(i y a)`, `a = π/(d+1)`,
/// with 0-based states.
pub fn spectral_count(d: usize, n: usize, x: usize, y: usize) -> f64 {
    let m = d as i64 + 1;
    let (x, y) = (x as i64 + 1, y as i64 + 1);
    let total: f64 = (1..m)
        .map(|i| cos_frac(i, m).powi(n as i32) * sin_frac(i * x, m) * sin_frac(i * y, m))
        .sum();
    2.0 / m as f64 * total
}

/// `Q_0^n(1)(x) = (2/(d+1)) Σ_{i odd} cos^n(i a) sin(i x a) cot(i a / 2)`.
pub fn spectral_row_sum(d: usize, n: usize, x: usize) -> f64 {
    row_sum_with(d, n, x, |i, m| cos_frac(i, 2 * m) / sin_frac(i, 2 * m))
}

/// The same sum with `cot(i a)` in place of the half angle, as printed.
pub fn printed_spectral_row_sum(d: usize, n: usize, x: usize) -> f64 {
    row_sum_with(d, n, x, |i, m| cos_frac(i, m) / sin_frac(i, m))
}

fn row_sum_with(d: usize, n: usize, x: usize, cot: impl Fn(i64, i64) -> f64) -> f64 {
    let m = d as i64 + 1;
    let x = x as i64 + 1;
    let total: f64 = (1..m)
        .step_by(2)
        .map(|i| cos_frac(i, m).powi(n as i32) * sin_frac(i * x, m) * cot(i, m))
        .sum();
    2.0 / m as f64 * total
}

/// Evaluates `2^n Q_0^n(x, y)` from the spectral sum in multiprecision
/// arithmetic and rounds to the nearest integer.
pub struct ExactSpectralCounter {
    precision: usize,
    consts: Consts,
}

const RM: RoundingMode = RoundingMode::ToEven;

impl ExactSpectralCounter {
    /// Works for `n <= nmax`; the precision grows with `nmax`.
    pub fn new(nmax: usize) -> Result<Self> {
        let consts = Consts::new().map_err(|_| Error::InvalidParameter("multiprecision setup"))?;
        Ok(ExactSpectralCounter { precision: 128 + 2 * nmax, consts })
    }

    fn word(&self, v: u64) -> BigFloat {
        BigFloat::from_word(v, self.precision)
    }

    /// `(cos(k π/m), sin(k π/m))` at the working precision.
    fn trig(&mut self, k: i64, m: i64) -> (BigFloat, BigFloat) {
        let p = self.precision;
        let pi = self.consts.pi(p, RM);
        let angle = pi.mul(&self.word(k as u64), p, RM).div(&self.word(m as u64), p, RM);
        (angle.cos(p, RM, &mut self.consts), angle.sin(p, RM, &mut self.consts))
    }

    /// `2^n C`-scaled spectral sum, i.e. the number of paths.
    pub fn count(&mut self, d: usize, n: usize, x: usize, y: usize) -> Option<BigUint> {
        let p = self.precision;
        let m = d as i64 + 1;
        let (x, y) = (x as i64 + 1, y as i64 + 1);
        let mut total = self.word(0);
        for i in 1..m {
            let (c, _) = self.trig(i, m);
            let (_, sx) = self.trig(i * x, m);
            let (_, sy) = self.trig(i * y, m);
            let term = c.powi(n, p, RM).mul(&sx, p, RM).mul(&sy, p, RM);
            total = total.add(&term, p, RM);
        }
        let scale = self.word(2).powi(n + 1, p, RM).div(&self.word(m as u64), p, RM);
        round_to_biguint(&total.mul(&scale, p, RM))
    }
}

/// Nearest integer to a nonnegative (or tiny negative) multiprecision value.
fn round_to_biguint(v: &BigFloat) -> Option<BigUint> {
    if v.is_zero() {
        return Some(BigUint::zero());
    }
    let (words, _, sign, exponent, _) = v.as_raw_parts()?;
    let bits = 64 * words.len() as i64;
    let e = exponent as i64;
    if sign == Sign::Neg || e < 0 {
        // magnitude below one half rounds to zero; larger negatives are invalid
        return if e <= 0 { Some(BigUint::zero()) } else { None };
    }
    let digits: Vec<u32> =
        words.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect();
    let mantissa = BigUint::from_slice(&digits);
    let shift = bits - e;
    if shift <= 0 {
        return Some(mantissa << (-shift) as usize);
    }
    let half = BigUint::from(1u8) << (shift - 1) as usize;
    Some((mantissa + half) >> shift as usize)
}

/// `C_n(x) = Σ_l (-1)^l binom((x-1)-l, l) C_{n+(x-1)-2l}(1)` with 1-based `x`
/// (0-based argument here). Needs `n + x <= table.nmax`.
pub fn multiple_angle_recurrence(table: &PathCountTable, n: usize, x: usize) -> Result<BigInt> {
    if x >= table.d {
        return Err(Error::InvalidParameter("state out of range"));
    }
    if n + x > table.nmax {
        return Err(Error::InvalidParameter("count table too short"));
    }
    let mut total = BigInt::zero();
    for l in 0..=x / 2 {
        let term = BigInt::from(binomial(x - l, l)) * BigInt::from(table.row_sum(n + x - 2 * l, 0).clone());
        if l % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    Ok(total)
}

/// `binom(n, k)` exactly.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u8);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn binom_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Q_0`, the walk kernel restricted to the segment with `θ = 0`.
pub fn q_zero(d: usize) -> Matrix {
    Matrix::from_fn(d, |x, y| if x.abs_diff(y) == 1 { 0.5 } else { 0.0 })
}

/// `(1+θ/2)^{-n} Σ_m binom(n,m) w(m) Q_0^m` for a weight exponent rule `w`.
fn binomial_sum(model: &Model, n: usize, weight: impl Fn(usize) -> f64) -> Matrix {
    let d = model.d();
    let q0 = q_zero(d);
    let mut out = Matrix::zeros(d);
    let mut power = Matrix::identity(d);
    for m in 0..=n {
        out = out.add(&power.scale(binom_f64(n, m) * weight(m)));
        power = power.mul(&q0);
    }
    out.scale((1.0 + model.theta() / 2.0).powi(-(n as i32)))
}

/// `Q^n = (1+θ/2)^{-n} Σ_m binom(n,m) (θ/2)^{n-m} Q_0^m`.
pub fn binomial_theta_relation(model: &Model, n: usize) -> Kernel {
    let h = model.theta() / 2.0;
    let entries = binomial_sum(model, n, |m| h.powi((n - m) as i32));
    Kernel { entries, kind: KernelKind::Generic }
}

/// The relation with the exponent `(θ/2)^m`, as printed.
pub fn printed_binomial_theta_relation(model: &Model, n: usize) -> Kernel {
    let h = model.theta() / 2.0;
    let entries = binomial_sum(model, n, |m| h.powi(m as i32));
    Kernel { entries, kind: KernelKind::Generic }
}

/// Printed forms of the row-sum and binomial identities that disagree with
/// the exact quantities.
pub(crate) fn erratum_checks() -> Vec<CheckReport> {
    let mut out = Vec::new();
    let table = count_paths(3, 0).expect("d >= 1");
    let exact = biguint_to_f64(table.row_sum(0, 0));
    let params = Params { d: 3, theta: 0.0, n: Some(0), x: None };
    out.push(
        CheckReport::eq("erratum.row_sum_cot", params, printed_spectral_row_sum(3, 0, 0), exact)
            .with_note("known erratum: the row sum needs cot(i a / 2), not cot(i a)"),
    );
    let c = Model::fixture_c();
    let printed = printed_binomial_theta_relation(&c, 1).entries[(0, 0)];
    out.push(
        CheckReport::eq(
            "erratum.binomial_exponent",
            Params { n: Some(1), ..Params::model(&c) },
            printed,
            c.matrix_q().entries[(0, 0)],
        )
        .with_note("known erratum: the weight on Q_0^m must be (θ/2)^(n-m)"),
    );
    out
}

/// Lossy conversion used for comparisons with floating values.
pub fn biguint_to_f64(v: &BigUint) -> f64 {
    v.to_u64_digits().iter().rev().fold(0.0, |acc, d| acc * 18_446_744_073_709_551_616.0 + *d as f64)
}
