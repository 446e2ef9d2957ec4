//! Independent reference computations shared by the integration tests.
//!
//! Everything here is rebuilt from the walk's transition probabilities with
//! plain nested vectors, so the library's kernels, flows and closed forms are
//! never consulted.

#![allow(dead_code)]

pub type Mat = Vec<Vec<f64>>;

/// Sub-stochastic walk matrix on `d` sites.
pub fn walk(d: usize, theta: f64) -> Mat {
    let p = 1.0 / (2.0 + theta);
    let h = theta / (2.0 + theta);
    (0..d)
        .map(|x| {
            (0..d)
                .map(|y| match x.abs_diff(y) {
                    0 => h,
                    1 => p,
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Walk on `S ∪ {c}` with the cemetery last and absorbing.
pub fn walk_with_cemetery(d: usize, theta: f64) -> Mat {
    let q = walk(d, theta);
    let mut k = vec![vec![0.0; d + 1]; d + 1];
    for x in 0..d {
        let mut s = 0.0;
        for y in 0..d {
            k[x][y] = q[x][y];
            s += q[x][y];
        }
        k[x][d] = 1.0 - s;
    }
    k[d][d] = 1.0;
    k
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i][j] += aik * b[k][j];
                }
            }
        }
    }
    c
}

pub fn identity(n: usize) -> Mat {
    (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect()
}

pub fn apply(a: &Mat, f: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(f).map(|(x, y)| x * y).sum()).collect()
}

pub fn act_left(mu: &[f64], a: &Mat) -> Vec<f64> {
    let n = a[0].len();
    let mut out = vec![0.0; n];
    for (x, m) in mu.iter().enumerate() {
        for y in 0..n {
            out[y] += m * a[x][y];
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Top eigenpair of the walk by power iteration on `Q + I`, with the
/// eigenvector positive and normalised so that its mean square is one.
pub fn top_eigenpair(d: usize, theta: f64) -> (f64, Vec<f64>) {
    let q = walk(d, theta);
    let mut v: Vec<f64> = (0..d).map(|x| 1.0 + x as f64 * 1e-3).collect();
    for _ in 0..200_000 {
        let mut w = apply(&q, &v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += vi;
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let diff = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        if diff <= 1e-15 {
            break;
        }
    }
    let qv = apply(&q, &v);
    let e0 = dot(&v, &qv) / dot(&v, &v);
    let scale = (v.iter().map(|x| x * x).sum::<f64>() / d as f64).sqrt();
    (e0, v.iter().map(|x| x / scale).collect())
}

/// `(γ_n(1), γ_n(f))` by repeated multiplication.
pub fn gamma(eta0: &[f64], q: &Mat, n: usize, f: &[f64]) -> (f64, f64) {
    let mut mu = eta0.to_vec();
    for _ in 0..n {
        mu = act_left(&mu, q);
    }
    (mu.iter().sum(), dot(&mu, f))
}

/// Single-draw second moments of the Doob-twisted sampler: the terminal law
/// of the twisted chain and the weight attached to each terminal state.
pub fn doob_single_draw(d: usize, theta: f64, eta0: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let q = walk(d, theta);
    let (e0, phi) = top_eigenpair(d, theta);
    let twisted: Mat = (0..d)
        .map(|x| (0..d).map(|y| q[x][y] * phi[y] / (e0 * phi[x])).collect())
        .collect();
    let eta_phi = dot(eta0, &phi);
    let mut law: Vec<f64> = eta0.iter().zip(&phi).map(|(e, p)| e * p / eta_phi).collect();
    for _ in 0..n {
        law = act_left(&law, &twisted);
    }
    let weights = phi.iter().map(|p| e0.powi(n as i32) * eta_phi / p).collect();
    (law, weights)
}

/// `(v, w)` for the Doob-twisted sampler from the single-draw law.
pub fn doob_variances(d: usize, theta: f64, eta0: &[f64], n: usize, f: &[f64]) -> (f64, f64) {
    let (law, wts) = doob_single_draw(d, theta, eta0, n);
    let (z, gf) = gamma(eta0, &walk(d, theta), n, f);
    let eta_f = gf / z;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    let mut centred = 0.0;
    for y in 0..d {
        let u = wts[y] * f[y] / z;
        m1 += law[y] * u;
        m2 += law[y] * u * u;
        centred += law[y] * (wts[y] * (f[y] - eta_f) / z).powi(2);
    }
    (m2 - m1 * m1, centred)
}

/// Reflected walk and its survival potential.
pub fn reflected(d: usize, theta: f64) -> (Vec<f64>, Mat) {
    let q = walk(d, theta);
    let g: Vec<f64> = q.iter().map(|r| r.iter().sum()).collect();
    let m = q.iter().zip(&g).map(|(r, gx)| r.iter().map(|v| v / gx).collect()).collect();
    (g, m)
}

/// `(v, w)` for the reflected-walk sampler by a forward recursion on the
/// squared weights.
pub fn reflected_variances(d: usize, theta: f64, eta0: &[f64], n: usize, f: &[f64]) -> (f64, f64) {
    let (g, m) = reflected(d, theta);
    let mut first = eta0.to_vec();
    let mut second = eta0.to_vec();
    for _ in 0..n {
        let a: Vec<f64> = first.iter().zip(&g).map(|(u, gx)| u * gx).collect();
        let b: Vec<f64> = second.iter().zip(&g).map(|(u, gx)| u * gx * gx).collect();
        first = act_left(&a, &m);
        second = act_left(&b, &m);
    }
    let z: f64 = first.iter().sum();
    let eta_f = dot(&first, f) / z;
    let f2: Vec<f64> = f.iter().map(|v| v * v).collect();
    let c2: Vec<f64> = f.iter().map(|v| (v - eta_f).powi(2)).collect();
    (dot(&second, &f2) / (z * z) - eta_f * eta_f, dot(&second, &c2) / (z * z))
}

/// The same second moment by brute-force enumeration of all weighted paths.
pub fn reflected_second_moment_paths(d: usize, theta: f64, eta0: &[f64], n: usize, f: &[f64]) -> (f64, f64) {
    let (g, m) = reflected(d, theta);
    let mut first = 0.0;
    let mut second = 0.0;
    let total = d.pow(n as u32 + 1);
    for code in 0..total {
        let mut c = code;
        let path: Vec<usize> = (0..=n)
            .map(|_| {
                let s = c % d;
                c /= d;
                s
            })
            .collect();
        let mut prob = eta0[path[0]];
        let mut weight = 1.0;
        for p in 0..n {
            prob *= m[path[p]][path[p + 1]];
            weight *= g[path[p]];
        }
        if prob > 0.0 {
            first += prob * weight * f[path[n]];
            second += prob * (weight * f[path[n]]).powi(2);
        }
    }
    (first, second)
}

/// `E[Z^N η^N_n(f)]` for the soft particle sampler with `N` particles,
/// enumerating every joint configuration. Selection keeps particle `i` with
/// probability `g(x_i)` and otherwise copies a particle chosen in proportion
/// to `g`.
pub fn soft_unbiasedness(d: usize, theta: f64, eta0: &[f64], n: usize, particles: usize, f: &[f64]) -> f64 {
    let (g, m) = reflected(d, theta);
    let configs = d.pow(particles as u32);
    let decode = |mut c: usize| -> Vec<usize> {
        (0..particles)
            .map(|_| {
                let s = c % d;
                c /= d;
                s
            })
            .collect()
    };
    let encode = |xs: &[usize]| xs.iter().rev().fold(0, |acc, &x| acc * d + x);
    let mut mass = vec![0.0; configs];
    for c in 0..configs {
        mass[c] = decode(c).iter().map(|&x| eta0[x]).product();
    }
    for _ in 0..n {
        let mut next = vec![0.0; configs];
        for c in 0..configs {
            if mass[c] == 0.0 {
                continue;
            }
            let xs = decode(c);
            let gs: Vec<f64> = xs.iter().map(|&x| g[x]).collect();
            let gsum: f64 = gs.iter().sum();
            let factor = gsum / particles as f64;
            // law of each selected state, independent across particles
            let sel: Vec<Vec<f64>> = (0..particles)
                .map(|i| {
                    let mut law = vec![0.0; d];
                    law[xs[i]] += gs[i];
                    for j in 0..particles {
                        law[xs[j]] += (1.0 - gs[i]) * gs[j] / gsum;
                    }
                    act_left(&law, &m)
                })
                .collect();
            for t in 0..configs {
                let ys = decode(t);
                let p: f64 = ys.iter().enumerate().map(|(i, &y)| sel[i][y]).product();
                next[encode(&ys)] += mass[c] * factor * p;
            }
        }
        mass = next;
    }
    (0..configs)
        .map(|c| mass[c] * decode(c).iter().map(|&x| f[x]).sum::<f64>() / particles as f64)
        .sum()
}

/// `E[Z^N η^N_n(f)]` for the hard particle sampler: particles move on
/// `S ∪ {c}`, dead ones copy a uniformly chosen survivor, and extinction
/// contributes zero.
pub fn hard_unbiasedness(d: usize, theta: f64, eta0: &[f64], n: usize, particles: usize, f: &[f64]) -> f64 {
    let k = walk_with_cemetery(d, theta);
    let s = d + 1;
    let configs = s.pow(particles as u32);
    let decode = |mut c: usize| -> Vec<usize> {
        (0..particles)
            .map(|_| {
                let v = c % s;
                c /= s;
                v
            })
            .collect()
    };
    let mut mass = vec![0.0; configs];
    for c in 0..configs {
        let xs = decode(c);
        if xs.iter().all(|&x| x < d) {
            mass[c] = xs.iter().map(|&x| eta0[x]).product();
        }
    }
    for _ in 0..n {
        let mut next = vec![0.0; configs];
        for c in 0..configs {
            if mass[c] == 0.0 {
                continue;
            }
            let xs = decode(c);
            let alive: Vec<usize> = xs.iter().copied().filter(|&x| x < d).collect();
            if alive.is_empty() {
                continue;
            }
            let sel: Vec<Vec<f64>> = xs
                .iter()
                .map(|&x| {
                    let mut law = vec![0.0; s];
                    if x < d {
                        law[x] = 1.0;
                    } else {
                        for &a in &alive {
                            law[a] += 1.0 / alive.len() as f64;
                        }
                    }
                    act_left(&law, &k)
                })
                .collect();
            for t in 0..configs {
                let ys = decode(t);
                let p: f64 = ys.iter().enumerate().map(|(i, &y)| sel[i][y]).product();
                if p == 0.0 {
                    continue;
                }
                let survivors = ys.iter().filter(|&&y| y < d).count();
                next[t] += mass[c] * p * survivors as f64 / particles as f64;
            }
        }
        mass = next;
    }
    (0..configs)
        .map(|c| {
            let xs = decode(c);
            let alive: Vec<usize> = xs.into_iter().filter(|&x| x < d).collect();
            if alive.is_empty() {
                0.0
            } else {
                mass[c] * alive.iter().map(|&x| f[x]).sum::<f64>() / alive.len() as f64
            }
        })
        .sum()
}

/// Count of nearest-neighbour paths staying in `{0, ..., d-1}`, in `u128`.
pub fn path_counts(d: usize, n: usize) -> Vec<Vec<u128>> {
    let mut c: Vec<Vec<u128>> = (0..d).map(|x| (0..d).map(|y| u128::from(x == y)).collect()).collect();
    for _ in 0..n {
        c = (0..d)
            .map(|x| {
                (0..d)
                    .map(|y| {
                        let left = if y > 0 { c[x][y - 1] } else { 0 };
                        let right = if y + 1 < d { c[x][y + 1] } else { 0 };
                        left + right
                    })
                    .collect()
            })
            .collect();
    }
    c
}
