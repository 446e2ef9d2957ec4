//! Structural invariants checked on randomly drawn models and inputs.

use proptest::prelude::*;
use qswlab::combinatorics::{count_paths, biguint_to_f64, q_zero};
use qswlab::linalg::{dot, Matrix};
use qswlab::model::{dobrushin_beta, rho_ratio, tv_distance};
use qswlab::rng::RngStream;
use qswlab::samplers::{sample, sample_hard_smc, sample_soft_smc, SamplerKind};
use qswlab::semigroup::{conditioned_operator_pn, FeynmanKac};
use qswlab::spectral::{
    doob_kernel, e1bar_closed_form, eigensystem, quasi_stationary_law, tilde_spectrum,
};
use qswlab::variance::VarianceEngine;
use qswlab::{Measure, Model};

const THETAS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 10.0];

fn model_params(dmax: usize) -> impl Strategy<Value = (usize, f64)> {
    (2..=dmax, 0..THETAS.len()).prop_map(|(d, i)| (d, THETAS[i]))
}

fn probability(d: usize) -> impl Strategy<Value = Measure> {
    prop::collection::vec(0.01f64..1.0, d).prop_map(|w| Measure::normalized(w).unwrap())
}

fn stochastic(d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), d).prop_map(move |rows| {
        Matrix::from_fn(d, |x, y| {
            let s: f64 = rows[x].iter().sum::<f64>() + 1e-9;
            (rows[x][y] + 1e-9 / d as f64) / s
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn soft_decomposition_recovers_walk((d, theta) in model_params(50)) {
        let m = Model::uniform(d, theta).unwrap();
        let q = m.matrix_q().entries;
        let sd = m.soft_decomposition();
        let rebuilt = sd.m.entries.scale_rows(&sd.g);
        prop_assert!(rebuilt.max_abs_diff(&q) <= 1e-14);
        prop_assert!(q.is_symmetric(0.0));
        for s in sd.m.entries.row_sums().iter().chain(&doob_kernel(&m).entries.row_sums()) {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
        let qt = m.matrix_qtilde().unwrap().entries;
        prop_assert!(qt.max_abs_diff(&q.scale_rows(&sd.g)) <= 1e-15);
    }

    #[test]
    fn total_variation_is_a_metric(
        (a, b, c) in (2usize..8).prop_flat_map(|d| (probability(d), probability(d), probability(d)))
    ) {
        prop_assert!(tv_distance(&a, &b) >= 0.0);
        prop_assert_eq!(tv_distance(&a, &b), tv_distance(&b, &a));
        prop_assert!(tv_distance(&a, &a) == 0.0);
        prop_assert!(tv_distance(&a, &c) <= tv_distance(&a, &b) + tv_distance(&b, &c) + 1e-15);
    }

    #[test]
    fn dobrushin_coefficient_is_submultiplicative(
        (m1, m2) in (2usize..8).prop_flat_map(|d| (stochastic(d), stochastic(d)))
    ) {
        let prod = m1.mul(&m2);
        prop_assert!(dobrushin_beta(&prod) <= dobrushin_beta(&m1) * dobrushin_beta(&m2) + 1e-14);
        let d = m1.dim();
        let mut sup: f64 = 0.0;
        for x in 0..d {
            for y in 0..d {
                let a = Measure { weights: m1.row(x).to_vec(), cemetery: 0.0 };
                let b = Measure { weights: m1.row(y).to_vec(), cemetery: 0.0 };
                sup = sup.max(tv_distance(&a, &b));
            }
        }
        prop_assert!((sup - dobrushin_beta(&m1)).abs() <= 1e-15);
    }

    #[test]
    fn eigenfunctions_are_orthonormal_and_exact((d, theta) in model_params(50)) {
        let b = eigensystem(&Model::uniform(d, theta).unwrap());
        let q = Model::uniform(d, theta).unwrap().matrix_q().entries;
        for i in 0..d {
            let qphi = q.apply(&b.eigenfunctions[i]);
            for x in 0..d {
                prop_assert!((qphi[x] - b.eigenvalues[i] * b.eigenfunctions[i][x]).abs() <= 1e-12);
            }
            for j in 0..d {
                let ip = dot(&b.eigenfunctions[i], &b.eigenfunctions[j]) / d as f64;
                prop_assert!((ip - f64::from(u8::from(i == j))).abs() <= 1e-12);
            }
        }
        prop_assert!((e1bar_closed_form(d, theta) - b.e1bar).abs() <= 1e-12);
    }

    #[test]
    fn doob_conjugation((d, theta) in model_params(12), n in 0usize..=100) {
        let m = Model::uniform(d, theta).unwrap();
        let b = eigensystem(&m);
        let qn = m.matrix_q().entries.pow(n);
        let mn = doob_kernel(&m).entries.pow(n);
        let phi = b.phi0();
        let scale = b.e0().powi(n as i32);
        for x in 0..d {
            for y in 0..d {
                prop_assert!((qn[(x, y)] - scale * phi[x] * mn[(x, y)] / phi[y]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn quasi_stationary_moments(d in 1usize..=50) {
        let b = eigensystem(&Model::uniform(d, 1.0).unwrap());
        let pi = quasi_stationary_law(d);
        let inv: Vec<f64> = b.phi0().iter().map(|p| 1.0 / p).collect();
        let u_phi = b.phi0().iter().sum::<f64>() / d as f64;
        prop_assert!((pi.integrate(b.phi0()) - 1.0 / u_phi).abs() <= 1e-12);
        prop_assert!((pi.integrate(&inv) - 1.0 / u_phi).abs() <= 1e-12);
    }

    #[test]
    fn tilde_spectrum_is_similar((d, theta) in model_params(30)) {
        let m = Model::uniform(d, theta).unwrap();
        let ts = tilde_spectrum(&m).unwrap();
        let qt = m.matrix_qtilde().unwrap().entries;
        let sd = m.soft_decomposition();
        let sq: Vec<f64> = sd.g.iter().map(|g| g.sqrt()).collect();
        let inv: Vec<f64> = sq.iter().map(|s| 1.0 / s).collect();
        let r = qt.scale_rows(&inv).scale_cols(&sq);
        prop_assert!(r.is_symmetric(1e-15));
        let rv = r.apply(&ts.psi0);
        for x in 0..d {
            prop_assert!((rv[x] - ts.e0tilde * ts.psi0[x]).abs() <= 1e-10);
        }
        let right = qt.apply(&ts.psi0_tilde);
        for x in 0..d {
            prop_assert!((right[x] - ts.e0tilde * ts.psi0_tilde[x]).abs() <= 1e-10);
        }
        let trace: f64 = (0..d).map(|x| qt[(x, x)]).sum();
        prop_assert!((ts.eigenvalues.iter().sum::<f64>() - trace).abs() <= 1e-10);
    }

    #[test]
    fn survival_sandwiches((d, theta) in model_params(20), n in 0usize..=100) {
        let m = Model::uniform(d, theta).unwrap();
        let b = eigensystem(&m);
        let rho = rho_ratio(b.phi0()).unwrap();
        let qn1 = m.matrix_q().entries.pow(n).row_sums();
        let e0n = b.e0().powi(n as i32);
        for v in &qn1 {
            prop_assert!(*v >= e0n / rho * (1.0 - 1e-12) && *v <= rho * e0n * (1.0 + 1e-12));
        }
        let ts = tilde_spectrum(&m).unwrap();
        let qtn1 = m.matrix_qtilde().unwrap().entries.pow(n).row_sums();
        let etn = ts.e0tilde.powi(n as i32);
        for v in &qtn1 {
            prop_assert!(*v >= etn / ts.rho_psi0 * (1.0 - 1e-12) && *v <= ts.rho_psi0 * etn * (1.0 + 1e-12));
        }
    }

    #[test]
    fn conditioned_operator_contracts_dirac_flows((d, theta) in model_params(8), n in 0usize..=20) {
        let m = Model::uniform(d, theta).unwrap();
        let fk = FeynmanKac::soft(&m);
        let beta = dobrushin_beta(&conditioned_operator_pn(&m, n).unwrap().entries);
        let mut sup: f64 = 0.0;
        for x in 0..d {
            for y in 0..d {
                let a = fk.flow(&Measure::dirac(d, x).weights, n).unwrap();
                let b = fk.flow(&Measure::dirac(d, y).weights, n).unwrap();
                let ma = Measure { weights: a.etas[n].clone(), cemetery: 0.0 };
                let mb = Measure { weights: b.etas[n].clone(), cemetery: 0.0 };
                sup = sup.max(tv_distance(&ma, &mb));
            }
        }
        prop_assert!((sup - beta).abs() <= 1e-12);
    }

    #[test]
    fn centred_variances_are_shifted_variances(
        (d, theta) in model_params(6),
        n in 0usize..=10,
        f in prop::collection::vec(-2.0f64..2.0, 6),
    ) {
        let m = Model::uniform(d, theta).unwrap();
        let e = VarianceEngine::evolve(&m, n).unwrap();
        let f = &f[..d];
        let c: Vec<f64> = f.iter().map(|v| v - e.eta_f(n, f)).collect();
        prop_assert!((e.w_dp(n, f).unwrap() - e.v_dp(n, &c).unwrap()).abs() <= 1e-10);
        prop_assert!((e.w_is(n, f).unwrap() - e.v_is(n, &c).unwrap()).abs() <= 1e-10);
        prop_assert!((e.w_soft(n, f).unwrap() - e.v_soft(n, &c).unwrap()).abs() <= 1e-10);
        prop_assert!((e.w_soft(n, f).unwrap() - e.w_soft_centered(n, f).unwrap()).abs() <= 1e-10);
        prop_assert!((e.v_soft(n, f).unwrap() - e.v_soft_telescoping(n, f).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn sampler_outputs_are_well_formed(
        (d, theta) in model_params(5),
        n in 0usize..=6,
        particles in 1usize..=12,
        seed in any::<u64>(),
    ) {
        let m = Model::uniform(d, theta).unwrap();
        for kind in SamplerKind::ALL {
            let out = sample(kind, &m, n, particles, &mut RngStream::new(seed, 0), false).unwrap();
            prop_assert!(out.z >= 0.0);
            if matches!(kind, SamplerKind::Soft | SamplerKind::Hard) {
                prop_assert!(out.z <= 1.0);
            }
        }
        let soft = sample_soft_smc(&m, n, particles, &mut RngStream::new(seed, 1), true).unwrap();
        prop_assert_eq!(soft.eta.cemetery, 0.0);
        for line in &soft.paths.unwrap().paths {
            prop_assert_eq!(line.len(), n + 1);
            prop_assert!(line.iter().all(|&x| x < d));
        }
        let mut last = 1.0;
        for k in 0..=n {
            let hard = sample_hard_smc(&m, k, particles, &mut RngStream::new(seed, 2), true).unwrap();
            prop_assert!(hard.z <= last);
            last = hard.z;
            if let Some(paths) = hard.paths {
                for line in &paths.paths {
                    prop_assert_eq!(line.len(), k + 1);
                    prop_assert!(line[k] < d);
                }
            }
        }
    }

    #[test]
    fn path_counts_match_float_powers(d in 1usize..=12, n in 0usize..=40) {
        let table = count_paths(d, n).unwrap();
        let q0 = q_zero(d).pow(n);
        for x in 0..d {
            let mut row = 0.0;
            for y in 0..d {
                let c = biguint_to_f64(table.count(n, x, y));
                prop_assert!((c / 2f64.powi(n as i32) - q0[(x, y)]).abs() <= 1e-10);
                row += c;
            }
            prop_assert_eq!(row, biguint_to_f64(table.row_sum(n, x)));
        }
    }
}
