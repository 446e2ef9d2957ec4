//! Library values against the independent references in `common`.

mod common;

use qswlab::semigroup::exact_path_measure;
use qswlab::spectral::{eigensystem, quasi_stationary_law};
use qswlab::variance::VarianceEngine;
use qswlab::{Measure, Model};

fn models() -> Vec<Model> {
    let mut out = vec![Model::fixture_a(), Model::fixture_b(), Model::fixture_c(), Model::fixture_d()];
    for (d, theta) in [(5, 0.5), (6, 2.0)] {
        out.push(Model::uniform(d, theta).unwrap());
        out.push(Model::equilibrium(d, theta).unwrap());
    }
    out
}

#[test]
fn power_iteration_agrees_with_closed_form_eigenpair() {
    for d in 1..=12 {
        for theta in [0.0, 1.0, 3.0] {
            let (e0, phi) = common::top_eigenpair(d, theta);
            let basis = eigensystem(&Model::uniform(d, theta).unwrap());
            assert!((e0 - basis.e0()).abs() < 1e-13, "d={d} theta={theta}");
            for (a, b) in phi.iter().zip(basis.phi0()) {
                assert!((a - b).abs() < 1e-10, "d={d} theta={theta}");
            }
        }
    }
}

#[test]
fn doob_variances_match_single_draw_law() {
    for m in models() {
        let d = m.d();
        let e = VarianceEngine::evolve(&m, 8).unwrap();
        let f: Vec<f64> = (0..d).map(|x| (x as f64 - 1.0).powi(2)).collect();
        for n in 0..=8 {
            let (v, w) = common::doob_variances(d, m.theta(), &m.eta0().weights, n, &f);
            assert!((e.v_dp(n, &f).unwrap() - v).abs() < 1e-10, "d={d} n={n}");
            assert!((e.w_dp(n, &f).unwrap() - w).abs() < 1e-10, "d={d} n={n}");
        }
    }
}

#[test]
fn reflected_recursion_matches_path_enumeration() {
    for (d, theta, n) in [(2, 0.0, 6), (3, 1.0, 6), (4, 0.5, 5)] {
        let eta0 = vec![1.0 / d as f64; d];
        let f: Vec<f64> = (0..d).map(|x| 1.0 + x as f64).collect();
        let (first, second) = common::reflected_second_moment_paths(d, theta, &eta0, n, &f);
        let (z, gf) = common::gamma(&eta0, &common::walk(d, theta), n, &f);
        assert!((first - gf).abs() < 1e-14);
        let (v, _) = common::reflected_variances(d, theta, &eta0, n, &f);
        let eta_f = gf / z;
        assert!((second / (z * z) - eta_f * eta_f - v).abs() < 1e-12);
    }
}

#[test]
fn reflected_variances_match_engine() {
    for m in models().into_iter().filter(|m| m.d() >= 2) {
        let d = m.d();
        let e = VarianceEngine::evolve(&m, 8).unwrap();
        let f: Vec<f64> = (0..d).map(|x| if x == 0 { 1.0 } else { 0.0 }).collect();
        for n in 0..=8 {
            let (v, w) = common::reflected_variances(d, m.theta(), &m.eta0().weights, n, &f);
            assert!((e.v_is(n, &f).unwrap() - v).abs() < 1e-10, "d={d} n={n}");
            assert!((e.w_is(n, &f).unwrap() - w).abs() < 1e-10, "d={d} n={n}");
        }
    }
}

#[test]
fn path_measure_total_is_normalising_constant() {
    for m in [Model::fixture_b(), Model::fixture_c(), Model::fixture_d()] {
        for n in 0..=5 {
            let pm = exact_path_measure(&m, n).unwrap();
            let (z, _) = common::gamma(&m.eta0().weights, &common::walk(m.d(), m.theta()), n, &vec![1.0; m.d()]);
            assert!((pm.normalization - z).abs() < 1e-14);
        }
    }
}

#[test]
fn single_particle_soft_sampler_is_unbiased() {
    for (d, theta) in [(2, 0.0), (3, 1.0), (4, 0.5)] {
        let eta0 = vec![1.0 / d as f64; d];
        let f: Vec<f64> = (0..d).map(|x| x as f64 + 0.5).collect();
        for n in 0..=5 {
            let (_, gf) = common::gamma(&eta0, &common::walk(d, theta), n, &f);
            let got = common::soft_unbiasedness(d, theta, &eta0, n, 1, &f);
            assert!((got - gf).abs() < 1e-12, "d={d} n={n}");
        }
    }
}

#[test]
fn two_particle_samplers_are_unbiased() {
    for (d, theta) in [(2, 0.0), (3, 0.0), (3, 1.0)] {
        let eta0 = quasi_stationary_law(d).weights;
        let f: Vec<f64> = (0..d).map(|x| 1.0 - x as f64).collect();
        for n in 0..=4 {
            let (_, gf) = common::gamma(&eta0, &common::walk(d, theta), n, &f);
            let soft = common::soft_unbiasedness(d, theta, &eta0, n, 2, &f);
            let hard = common::hard_unbiasedness(d, theta, &eta0, n, 2, &f);
            assert!((soft - gf).abs() < 1e-12, "soft d={d} n={n}");
            assert!((hard - gf).abs() < 1e-12, "hard d={d} n={n}");
        }
    }
}

#[test]
fn equilibrium_start_is_quasi_stationary() {
    for d in 2..=8 {
        let m = Model::equilibrium(d, 1.0).unwrap();
        let e = VarianceEngine::evolve(&m, 10).unwrap();
        let pi = quasi_stationary_law(d);
        for n in 0..=10 {
            for x in 0..d {
                let mut delta = vec![0.0; d];
                delta[x] = 1.0;
                assert!((e.eta_f(n, &delta) - pi.weights[x]).abs() < 1e-13);
            }
        }
        assert_eq!(Measure::uniform(d).dim(), d);
    }
}

#[test]
fn prekilling_comparison_with_vanishing_one_step_image() {
    // on three sites without laziness, K maps (1, 0, -1) extended by 0 at the cemetery to 0
    let m = Model::uniform(3, 0.0).unwrap();
    let f = [1.0, 0.0, -1.0];
    let k = m.kernel_k();
    let image: Vec<f64> = k.within.apply(&f);
    assert!(image.iter().all(|v| v.abs() < 1e-15), "{image:?}");
    let engine = VarianceEngine::evolve(&m, 8).unwrap();
    for n in 1..=8 {
        let reports = qswlab::bounds::check_hard_comparisons(&engine, n, &f, 0.0).unwrap();
        for id in ["hard_cmp.v_hat", "hard_cmp.w_hat"] {
            let r = reports.iter().find(|r| r.check_id == id).unwrap();
            assert!(r.lhs.abs() < 1e-15, "{id} n={n}: {}", r.lhs);
            assert!(r.rhs > 0.0 && r.holds(), "{id} n={n}: {}", r.rhs);
        }
    }
}
