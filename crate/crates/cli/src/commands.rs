use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};

use qswlab::bounds::{
    check_hard_comparisons, check_is_degeneracy, check_prop_ratio, check_soft_sandwich, check_taylor,
    check_survival_bounds_upto, check_flow_stability_upto, check_conditioned_stability_upto, check_tilde_gap, check_var_soft_estimates,
    erratum_suite, taylor_grid, CheckReport, Params,
};
use qswlab::combinatorics::count_paths;
use qswlab::samplers::{PathFunctional, ReplicatePlan, ReplicateRow, SamplerKind};
use qswlab::semigroup::{absorption_law, evolve};
use qswlab::spectral::{eigensystem, quasi_stationary, tilde_spectrum};
use qswlab::variance::{clamp_variance, empirical_variance, VarianceEngine};
use qswlab::{Error, Model};

use crate::config::{Command, ExperimentConfig};
use crate::error::CliError;
use crate::output::{Cell, Document, Table};

/// Random test functions per horizon in the stability audit.
pub const STABILITY_TRIALS: usize = 16;

pub fn run(cfg: &ExperimentConfig) -> Result<Document, CliError> {
    match cfg.command {
        Command::Spectral => spectral(cfg),
        Command::Flow => flow(cfg),
        Command::Sample => sample(cfg),
        Command::Variance => variance(cfg),
        Command::Bounds => bounds(cfg),
        Command::Paths => paths(cfg),
    }
}

fn spectral(cfg: &ExperimentConfig) -> Result<Document, CliError> {
    let model = cfg.model()?;
    let basis = eigensystem(&model);
    let (pi, pi_phi) = quasi_stationary(&model);
    let e0_tilde = match tilde_spectrum(&model) {
        Ok(t) => Some(t.e0tilde),
        Err(Error::DegenerateModel) => None,
        Err(e) => return Err(e.into()),
    };
    let json = json!({
        "d": cfg.d,
        "theta": cfg.theta,
        "E0": basis.e0(),
        "eigenvalues": basis.eigenvalues,
        "eigenfunctions": basis.eigenfunctions,
        "pi": pi.weights,
        "pi_phi": pi_phi.weights,
        "e1bar": basis.e1bar,
        "estar": basis.estar,
        "e0_tilde": e0_tilde,
        "s": basis.s,
    });

    let mut t = Table::new(["quantity", "i", "x", "value"]);
    let scalar = |t: &mut Table, q: &str, v: Option<f64>| {
        t.push(vec![q.into(), Cell::Empty, Cell::Empty, v.into()]);
    };
    scalar(&mut t, "E0", Some(basis.e0()));
    scalar(&mut t, "e1bar", Some(basis.e1bar));
    scalar(&mut t, "estar", Some(basis.estar));
    scalar(&mut t, "e0_tilde", e0_tilde);
    for (k, s) in basis.s.iter().enumerate() {
        t.push(vec!["s".into(), (k + 1).into(), Cell::Empty, (*s).into()]);
    }
    for (i, e) in basis.eigenvalues.iter().enumerate() {
        t.push(vec!["eigenvalue".into(), i.into(), Cell::Empty, (*e).into()]);
    }
    for (i, phi) in basis.eigenfunctions.iter().enumerate() {
        for (x, v) in phi.iter().enumerate() {
            t.push(vec!["eigenfunction".into(), i.into(), x.into(), (*v).into()]);
        }
    }
    for (name, m) in [("pi", &pi), ("pi_phi", &pi_phi)] {
        for (x, v) in m.weights.iter().enumerate() {
            t.push(vec![name.into(), Cell::Empty, x.into(), (*v).into()]);
        }
    }
    Ok(Document::Json { json, csv: t })
}

fn flow(cfg: &ExperimentConfig) -> Result<Document, CliError> {
    let model = cfg.model()?;
    let n = cfg.horizon();
    let d = cfg.d;
    let trace = evolve(&model, n)?;
    let law = absorption_law(&model, n)?;
    let mut columns = vec!["n".to_owned()];
    columns.extend((0..d).map(|x| format!("eta_{x}")));
    columns.extend((0..d).map(|x| format!("eta_hat_{x}")));
    columns.extend(["eta_hat_c", "z", "survival", "p_exit", "p_kill"].map(String::from));
    let mut t = Table::new(columns);
    for p in 0..=n {
        let mut row: Vec<Cell> = vec![p.into()];
        row.extend(trace.etas[p].weights.iter().map(|&v| Cell::from(v)));
        row.extend(trace.eta_hats[p].weights.iter().map(|&v| Cell::from(v)));
        row.push(trace.eta_hats[p].cemetery.into());
        row.push(trace.z[p].into());
        row.push(trace.survival[p].into());
        row.push(law.hard[p].into());
        row.push(law.soft[p].into());
        t.push(row);
    }
    Ok(Document::Table(t))
}

fn single<T: Copy>(values: &[T], key: &str) -> Result<T, CliError> {
    match values {
        [v] => Ok(*v),
        _ => Err(CliError::Config(format!("{key} takes exactly one value for this command"))),
    }
}

/// Replicates `0..cfg.replicates` on a pool of `cfg.jobs` threads, in order.
fn replicate(cfg: &ExperimentConfig, plan: &ReplicatePlan<'_>) -> Result<Vec<(ReplicateRow, f64)>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let rows = pool.install(|| {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let start = Instant::now();
                plan.run_one(r).map(|row| (row, start.elapsed().as_secs_f64()))
            })
            .collect::<Result<Vec<_>, Error>>()
    })?;
    Ok(rows)
}

fn sample(cfg: &ExperimentConfig) -> Result<Document, CliError> {
    let model = cfg.model()?;
    let f = cfg.function(&model)?;
    let n = single(&cfg.n, "n")?;
    let sampler = match cfg.samplers.as_slice() {
        [] => SamplerKind::Soft,
        s => single(s, "sampler")?,
    };
    let mean_along = |path: &[usize]| {
        path.iter().map(|&x| f.get(x).copied().unwrap_or(0.0)).sum::<f64>() / path.len() as f64
    };
    let plan = ReplicatePlan {
        model: &model,
        sampler,
        n,
        particles: cfg.particles,
        seed: cfg.seed,
        f: &f,
        f_path: cfg.path_f.as_ref().map(|_| &mean_along as &PathFunctional<'_>),
    };
    let rows = replicate(cfg, &plan)?;

    let mut columns = vec!["replicate", "z", "eta_f"];
    if cfg.path_f.is_some() {
        columns.push("path_f");
    }
    if cfg.timing {
        columns.push("wall_time");
    }
    let mut t = Table::new(columns);
    for (row, secs) in rows {
        let mut cells = vec![row.replicate.into(), row.z.into(), row.eta_f.into()];
        if cfg.path_f.is_some() {
            cells.push(row.path_f.into());
        }
        if cfg.timing {
            cells.push(secs.into());
        }
        t.push(cells);
    }
    Ok(Document::Table(t))
}

/// Closed-form `(v, w)` matching what the empirical estimator measures.
fn closed_forms(engine: &VarianceEngine, sampler: SamplerKind, n: usize, f: &[f64]) -> Result<(f64, f64), Error> {
    let (v, w) = match sampler {
        SamplerKind::Dp => (engine.v_dp(n, f)?, engine.w_dp(n, f)?),
        SamplerKind::Is => (engine.v_is(n, f)?, engine.w_is(n, f)?),
        SamplerKind::Hard if n > 0 => (engine.v_hard_normalized(n, f)?, engine.w_hard(n, f)?),
        SamplerKind::Soft | SamplerKind::Hard => (engine.v_soft(n, f)?, engine.w_soft(n, f)?),
    };
    Ok((clamp_variance(v)?.0, clamp_variance(w)?.0))
}

/// Differences below this are round-off and score zero.
pub const ROUND_OFF: f64 = 1e-12;

fn z_score(empirical: f64, closed: f64, se: f64) -> f64 {
    let diff = empirical - closed;
    if diff.abs() <= ROUND_OFF {
        0.0
    } else {
        diff / se
    }
}

fn variance(cfg: &ExperimentConfig) -> Result<Document, CliError> {
    let model = cfg.model()?;
    let f = cfg.function(&model)?;
    let trace = evolve(&model, cfg.horizon())?;
    let engine = VarianceEngine::new(&model, &trace)?;
    let samplers = if cfg.samplers.is_empty() { SamplerKind::ALL.to_vec() } else { cfg.samplers.clone() };
    let mut t = Table::new(["sampler", "n", "quantity", "closed_form", "empirical", "se", "z_score"]);
    for &sampler in &samplers {
        for &n in &cfg.n {
            let (v, w) = closed_forms(&engine, sampler, n, &f)?;
            let plan = ReplicatePlan {
                model: &model,
                sampler,
                n,
                particles: cfg.particles,
                seed: cfg.seed,
                f: &f,
                f_path: None,
            };
            let rows: Vec<ReplicateRow> = replicate(cfg, &plan)?.into_iter().map(|(r, _)| r).collect();
            let emp = empirical_variance(&rows, trace.z[n], engine.eta_f(n, &f), cfg.particles)?;
            for (q, closed, e, se) in [("v", v, emp.v, emp.v_se), ("w", w, emp.w, emp.w_se)] {
                t.push(vec![
                    sampler.name().into(),
                    n.into(),
                    q.into(),
                    closed.into(),
                    e.into(),
                    se.into(),
                    z_score(e, closed, se).into(),
                ]);
            }
        }
    }
    Ok(Document::Table(t))
}

/// Turns a `d >= 2` requirement into a not-applicable entry.
fn needs_pair(id: &str, model: &Model, r: Result<Vec<CheckReport>, Error>) -> Result<Vec<CheckReport>, CliError> {
    match r {
        Err(Error::DegenerateModel) => {
            Ok(vec![CheckReport::not_applicable(id, Params::model(model), "requires d >= 2")])
        }
        other => Ok(other?),
    }
}

fn bounds(cfg: &ExperimentConfig) -> Result<Document, CliError> {
    let model = cfg.model()?;
    let f = cfg.function(&model)?;
    let nmax = cfg.horizon();
    let wants = |c: &str| cfg.checks.iter().any(|k| k == c || k == "all");
    let engine = if wants("var_soft") || wants("sandwich") || wants("hard") {
        Some(VarianceEngine::evolve(&model, nmax)?)
    } else {
        None
    };
    let mut out: Vec<CheckReport> = Vec::new();
    if wants("thm1") {
        out.extend(check_survival_bounds_upto(&model, nmax));
    }
    if wants("thm2") {
        out.extend(check_flow_stability_upto(&model, nmax, STABILITY_TRIALS, cfg.seed));
    }
    if wants("thm3") {
        out.extend(check_conditioned_stability_upto(&model, nmax));
    }
    if wants("thm4") {
        out.extend(needs_pair("thm4", &model, check_tilde_gap(&model))?);
    }
    if wants("is") {
        out.extend(needs_pair("is_degeneracy", &model, check_is_degeneracy(&model, nmax))?);
    }
    if wants("ratio") {
        out.extend(check_prop_ratio(&model, nmax));
    }
    if wants("taylor") {
        out.extend(check_taylor(&taylor_grid(cfg.points)));
    }
    if let Some(engine) = &engine {
        for &n in &cfg.n {
            if wants("var_soft") {
                out.extend(check_var_soft_estimates(engine, n, &f)?);
            }
            if wants("sandwich") {
                out.extend(check_soft_sandwich(engine, n)?);
            }
            if wants("hard") && n > 0 {
                out.extend(check_hard_comparisons(engine, n, &f, 0.0)?);
            }
        }
    }
    if wants("errata") {
        out.extend(erratum_suite()?);
    }

    let json = serde_json::to_value(&out).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut t = Table::new([
        "check_id", "d", "theta", "n", "x", "lhs", "rhs", "margin", "verdict", "note", "expected",
    ]);
    for r in &out {
        t.push(vec![
            r.check_id.as_str().into(),
            r.params.d.into(),
            r.params.theta.into(),
            r.params.n.into(),
            r.params.x.into(),
            r.lhs.into(),
            r.rhs.into(),
            r.margin.into(),
            verdict_tag(&serde_json::to_value(r.verdict)).into(),
            r.note.as_str().into(),
            r.expected.map(|v| verdict_tag(&serde_json::to_value(v))).into(),
        ]);
    }
    Ok(Document::Json { json, csv: t })
}

fn verdict_tag(v: &Result<Value, serde_json::Error>) -> String {
    match v {
        Ok(Value::String(s)) => s.clone(),
        _ => String::new(),
    }
}

fn paths(cfg: &ExperimentConfig) -> Result<Document, CliError> {
    let d = cfg.d;
    let nmax = cfg.horizon();
    let table = count_paths(d, nmax)?;
    let t = if cfg.full {
        let mut t = Table::new(["n", "x", "y", "count"]);
        for n in 0..=nmax {
            for x in 0..d {
                for y in 0..d {
                    t.push(vec![n.into(), x.into(), y.into(), table.count(n, x, y).to_string().into()]);
                }
            }
        }
        t
    } else {
        let mut columns = vec!["n".to_owned()];
        columns.extend((0..d).map(|x| format!("sum_{x}")));
        let mut t = Table::new(columns);
        for n in 0..=nmax {
            let mut row: Vec<Cell> = vec![n.into()];
            row.extend((0..d).map(|x| Cell::from(table.row_sum(n, x).to_string())));
            t.push(row);
        }
        t
    };
    Ok(Document::Table(t))
}
