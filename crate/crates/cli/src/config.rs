use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use qswlab::rng::DEFAULT_SEED;
use qswlab::samplers::SamplerKind;
use qswlab::spectral::{eigensystem, quasi_stationary_law};
use qswlab::{Measure, Model};

use crate::error::CliError;

pub const SEED_ENV: &str = "QSWLAB_SEED";
pub const JOBS_ENV: &str = "QSWLAB_JOBS";

#[derive(Debug, Parser)]
#[command(name = "qswlab", version, about = "Absorbed random walks: exact flows, samplers, variances and bound audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues, eigenfunctions, quasi-stationary laws and rates.
    Spectral,
    /// Exact flows, normalising constants and absorption-time laws.
    Flow,
    /// Replicate table for one sampler.
    Sample,
    /// Closed-form asymptotic variances against replicate estimates.
    Variance,
    /// Bound and erratum audit as check reports.
    Bounds,
    /// Exact path counts of the lazy-free walk.
    Paths,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectral => "spectral",
            Command::Flow => "flow",
            Command::Sample => "sample",
            Command::Variance => "variance",
            Command::Bounds => "bounds",
            Command::Paths => "paths",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Number of interior sites.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Laziness parameter.
    #[arg(long, global = true)]
    pub theta: Option<f64>,
    /// Time horizon(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Population size.
    #[arg(long = "N", global = true)]
    pub particles: Option<usize>,
    #[arg(long, global = true)]
    pub replicates: Option<u64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// uniform | pi | delta:x | file:path (states are 0-based).
    #[arg(long, global = true)]
    pub eta0: Option<String>,
    /// phi0 | one | indicator:x | file:path (states are 0-based).
    #[arg(long, global = true)]
    pub f: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for replicate loops.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// dp | is | soft | hard (comma separated for `variance`).
    #[arg(long, global = true, value_delimiter = ',')]
    pub sampler: Option<Vec<String>>,
    /// Checks for `bounds`, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub check: Option<Vec<String>>,
    /// Grid size for the elementary inequality checks.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Path functional for `sample`: `mean` averages f along each line.
    #[arg(long = "path-f", global = true)]
    pub path_f: Option<String>,
    /// Add a wall-time column to `sample` output.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Full `(n, x, y)` table for `paths`.
    #[arg(long, global = true)]
    pub full: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    d: Option<usize>,
    theta: Option<f64>,
    n: Option<OneOrMany<usize>>,
    #[serde(rename = "N")]
    particles: Option<usize>,
    replicates: Option<u64>,
    seed: Option<u64>,
    eta0: Option<String>,
    f: Option<String>,
    format: Option<Format>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    sampler: Option<OneOrMany<String>>,
    check: Option<OneOrMany<String>>,
    points: Option<usize>,
    path_f: Option<String>,
    timing: Option<bool>,
    full: Option<bool>,
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Initial law selector.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Uniform,
    QuasiStationary,
    Dirac(usize),
    File(PathBuf),
}

impl FromStr for InitialLaw {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "uniform" => Ok(InitialLaw::Uniform),
            "pi" => Ok(InitialLaw::QuasiStationary),
            _ => match s.split_once(':') {
                Some(("delta", x)) => Ok(InitialLaw::Dirac(parse_index(x, "eta0")?)),
                Some(("file", p)) => Ok(InitialLaw::File(PathBuf::from(p))),
                _ => Err(CliError::Config(format!(
                    "eta0 must be uniform, pi, delta:x or file:path, got {s:?}"
                ))),
            },
        }
    }
}

/// Test-function selector.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Phi0,
    One,
    Indicator(usize),
    File(PathBuf),
}

impl FromStr for TestFunction {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "phi0" => Ok(TestFunction::Phi0),
            "one" => Ok(TestFunction::One),
            _ => match s.split_once(':') {
                Some(("indicator", x)) => Ok(TestFunction::Indicator(parse_index(x, "f")?)),
                Some(("file", p)) => Ok(TestFunction::File(PathBuf::from(p))),
                _ => Err(CliError::Config(format!(
                    "f must be phi0, one, indicator:x or file:path, got {s:?}"
                ))),
            },
        }
    }
}

fn parse_index(s: &str, key: &str) -> Result<usize, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("{key}: {s:?} is not a state index")))
}

/// Reads whitespace- or comma-separated reals.
fn read_vector(path: &Path, d: usize, key: &str) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{key}: cannot read {}: {e}", path.display())))?;
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>().map_err(|_| {
                CliError::Config(format!("{key}: {}: entry {} ({t:?}) is not a number", path.display(), i + 1))
            })
        })
        .collect::<Result<Vec<f64>, CliError>>()?;
    if values.len() != d {
        return Err(CliError::Config(format!(
            "{key}: {} holds {} values, expected d = {d}",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

/// Fully resolved run parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub d: usize,
    pub theta: f64,
    pub n: Vec<usize>,
    pub particles: usize,
    pub replicates: u64,
    pub seed: u64,
    pub eta0: InitialLaw,
    pub f: TestFunction,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub samplers: Vec<SamplerKind>,
    pub checks: Vec<String>,
    pub points: usize,
    pub path_f: Option<String>,
    pub timing: bool,
    pub full: bool,
}

pub const DEFAULT_HORIZON: usize = 10;
pub const DEFAULT_PARTICLES: usize = 1000;
pub const DEFAULT_REPLICATES: u64 = 100;
pub const DEFAULT_POINTS: usize = 10_000;
pub const CHECKS: [&str; 12] =
    ["all", "thm1", "thm2", "thm3", "thm4", "is", "ratio", "taylor", "var_soft", "sandwich", "hard", "errata"];

fn env_number<T: FromStr>(key: &str) -> Result<Option<T>, CliError> {
    match std::env::var(key) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{key}={v:?} is not a nonnegative integer"))),
        Err(_) => Ok(None),
    }
}

impl ExperimentConfig {
    pub fn resolve(command: Command, args: CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let d = args
            .d
            .or(file.d)
            .ok_or_else(|| CliError::Config("missing required parameter d (--d or config key \"d\")".into()))?;
        if d == 0 {
            return Err(CliError::Config("d must be at least 1".into()));
        }
        let theta = args.theta.or(file.theta).unwrap_or(0.0);
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(CliError::Config(format!("theta must be finite and nonnegative, got {theta}")));
        }
        let n = args.n.or(file.n.map(OneOrMany::into_vec)).unwrap_or_else(|| vec![DEFAULT_HORIZON]);
        if n.is_empty() {
            return Err(CliError::Config("n list is empty".into()));
        }
        let particles = args.particles.or(file.particles).unwrap_or(DEFAULT_PARTICLES);
        if particles == 0 {
            return Err(CliError::Config("N must be at least 1".into()));
        }
        let replicates = args.replicates.or(file.replicates).unwrap_or(DEFAULT_REPLICATES);
        if replicates == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        let seed = match args.seed.or(file.seed) {
            Some(s) => s,
            None => env_number(SEED_ENV)?.unwrap_or(DEFAULT_SEED),
        };
        let jobs = match args.jobs.or(file.jobs) {
            Some(j) => j,
            None => env_number(JOBS_ENV)?
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
        .max(1);
        let eta0 = args.eta0.or(file.eta0).as_deref().unwrap_or("uniform").parse()?;
        let f = args.f.or(file.f).as_deref().unwrap_or("phi0").parse()?;
        let samplers = args
            .sampler
            .or(file.sampler.map(OneOrMany::into_vec))
            .map(|v| {
                v.iter()
                    .map(|s| s.parse::<SamplerKind>().map_err(|e| CliError::Config(format!("sampler {s:?}: {e}"))))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()?
            .unwrap_or_default();
        let checks = args.check.or(file.check.map(OneOrMany::into_vec)).unwrap_or_else(|| vec!["all".into()]);
        if let Some(bad) = checks.iter().find(|c| !CHECKS.contains(&c.as_str())) {
            return Err(CliError::Config(format!("unknown check {bad:?}; expected one of {}", CHECKS.join(", "))));
        }
        let path_f = args.path_f.or(file.path_f);
        if let Some(p) = &path_f {
            if p != "mean" {
                return Err(CliError::Config(format!("path-f must be \"mean\", got {p:?}")));
            }
        }
        Ok(ExperimentConfig {
            command,
            d,
            theta,
            n,
            particles,
            replicates,
            seed,
            eta0,
            f,
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            out: args.out.or(file.out),
            jobs,
            samplers,
            checks,
            points: args.points.or(file.points).unwrap_or(DEFAULT_POINTS),
            path_f,
            timing: args.timing || file.timing.unwrap_or(false),
            full: args.full || file.full.unwrap_or(false),
        })
    }

    pub fn horizon(&self) -> usize {
        self.n.iter().copied().max().unwrap_or(DEFAULT_HORIZON)
    }

    fn check_state(&self, x: usize, key: &str) -> Result<(), CliError> {
        if x >= self.d {
            return Err(CliError::Config(format!("{key}: state {x} is outside 0..{}", self.d)));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let d = self.d;
        let eta0 = match &self.eta0 {
            InitialLaw::Uniform => Measure::uniform(d),
            InitialLaw::QuasiStationary => quasi_stationary_law(d),
            InitialLaw::Dirac(x) => {
                self.check_state(*x, "eta0")?;
                Measure::dirac(d, *x)
            }
            InitialLaw::File(p) => Measure::probability(read_vector(p, d, "eta0")?)
                .map_err(|e| CliError::Config(format!("eta0: {}: {e}", p.display())))?,
        };
        Model::new(d, self.theta, eta0).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn function(&self, model: &Model) -> Result<Vec<f64>, CliError> {
        let d = self.d;
        Ok(match &self.f {
            TestFunction::Phi0 => eigensystem(model).phi0().to_vec(),
            TestFunction::One => vec![1.0; d],
            TestFunction::Indicator(x) => {
                self.check_state(*x, "f")?;
                (0..d).map(|y| f64::from(u8::from(y == *x))).collect()
            }
            TestFunction::File(p) => read_vector(p, d, "f")?,
        })
    }
}
