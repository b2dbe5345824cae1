//! Experiment configuration, seeded parallel trials, summary statistics and
//! CSV / JSON / SVG reporting.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    run_heavy_tailed, run_one_plus_one, run_static, EngineError, HeavyTailedGa, HyperParams,
    Mutation, RunLimits, RunResult, Start, StaticParams, Target,
};
use crate::exact::{self, ExactError, ExactPoint, LambdaRounding};
use crate::objective::{JumpParams, ObjectiveError, Problem};

/// Version of the configuration file schema.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Value of the first column of every per-trial CSV row.
pub const TRIAL_CSV_SCHEMA: &str = "htga-trials/1";

pub const TRIAL_CSV_HEADER: [&str; 7] = [
    "schema",
    "trial",
    "seed",
    "iterations",
    "evaluations",
    "success",
    "best_fitness",
];

/// Trials below this count do not trigger the Wald warning.
pub const WALD_MIN_TRIALS: u64 = 10_000;

/// Relative tolerance of the Wald identity check.
pub const WALD_TOLERANCE: f64 = 0.05;

const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read config file {path}")]
    ConfigRead { path: PathBuf, source: io::Error },
    #[error("cannot parse config file {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },
    #[error("invalid config field `{field}`: {message}")]
    Field {
        field: &'static str,
        message: String,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0} is not finite")]
    NonFinite(String),
}

fn field_error(field: &'static str, message: impl Into<String>) -> HarnessError {
    HarnessError::Field {
        field,
        message: message.into(),
    }
}

impl From<ObjectiveError> for HarnessError {
    fn from(e: ObjectiveError) -> Self {
        field_error("k", e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    HeavyTailed(HyperParams),
    Static(StaticParams),
    OnePlusOne { chi: f64 },
    OnePlusOneHeavy { beta: f64 },
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::HeavyTailed(_) => "heavy_tailed",
            Algorithm::Static(_) => "static",
            Algorithm::OnePlusOne { .. } => "one_plus_one",
            Algorithm::OnePlusOneHeavy { .. } => "one_plus_one_heavy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    #[default]
    Random,
    LocalOptimum,
    AllOnes,
}

impl StartKind {
    fn to_start(self) -> Start {
        match self {
            StartKind::Random => Start::Random,
            StartKind::LocalOptimum => Start::LocalOptimum,
            StartKind::AllOnes => Start::AllOnes,
        }
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub problem: Problem,
    pub start: StartKind,
    pub trials: u64,
    pub budget: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub target: Target,
    /// Index of the first trial; later trials keep their seeds when a sweep
    /// is resumed.
    pub first_trial: u64,
}

/// Key-value configuration as read from a TOML file or assembled from flags.
/// Every field is optional; [`ConfigFile::merge`] lets flags override a file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: Option<u32>,
    pub algorithm: Option<String>,
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub start: Option<StartKind>,
    pub trials: Option<u64>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub first_trial: Option<u64>,
    /// Stop once this many one-bits are reached instead of at the optimum.
    pub target_ones: Option<usize>,
    pub beta_s: Option<f64>,
    pub u_s: Option<u64>,
    pub beta_lambda: Option<f64>,
    pub u_lambda: Option<u64>,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub lm: Option<u64>,
    pub lc: Option<u64>,
    pub delta: Option<f64>,
    pub chi: Option<f64>,
    pub beta: Option<f64>,
}

macro_rules! merge_fields {
    ($base:ident, $over:ident; $($f:ident),*) => {
        $( if $over.$f.is_some() { $base.$f = $over.$f; } )*
    };
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        let parsed: ConfigFile = toml::from_str(&text).map_err(|e| HarnessError::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        match parsed.schema_version {
            Some(CONFIG_SCHEMA_VERSION) => Ok(parsed),
            Some(v) => Err(field_error(
                "schema_version",
                format!("unsupported version {v}, expected {CONFIG_SCHEMA_VERSION}"),
            )),
            None => Err(field_error("schema_version", "missing")),
        }
    }

    /// Fields set in `overrides` replace those in `self`.
    pub fn merge(mut self, overrides: ConfigFile) -> ConfigFile {
        let o = overrides;
        merge_fields!(self, o; schema_version, algorithm, preset, n, k, start, trials, budget,
            seed, workers, first_trial, target_ones, beta_s, u_s, beta_lambda, u_lambda, p, c,
            lm, lc, delta, chi, beta);
        self
    }

    /// Validates and fills defaults. `env_seed` is used when no seed is set.
    pub fn resolve(&self, env_seed: Option<u64>) -> Result<ExperimentConfig, HarnessError> {
        let n = self.n.ok_or_else(|| field_error("n", "required"))?;
        if n == 0 {
            return Err(field_error("n", "must be positive"));
        }
        let problem = match self.k {
            Some(k) => Problem::Jump(JumpParams::new(n, k)?),
            None => Problem::OneMax { n },
        };
        let algorithm = self.resolve_algorithm(n)?;
        let trials = self.trials.unwrap_or(1);
        if trials == 0 {
            return Err(field_error("trials", "must be at least 1"));
        }
        let budget = self.budget.unwrap_or(10_000_000);
        if budget == 0 {
            return Err(field_error("budget", "must be at least 1"));
        }
        let workers = self.workers.unwrap_or(1);
        if workers == 0 {
            return Err(field_error("workers", "must be at least 1"));
        }
        let start = self.start.unwrap_or_default();
        if start == StartKind::LocalOptimum && self.k.is_none() {
            return Err(field_error("start", "local_optimum requires a jump size k"));
        }
        let target = match self.target_ones {
            Some(m) if m > n => return Err(field_error("target_ones", "exceeds n")),
            Some(m) => Target::OnesAtLeast(m),
            None => Target::Optimum,
        };
        Ok(ExperimentConfig {
            algorithm,
            problem,
            start,
            trials,
            budget,
            master_seed: self.seed.or(env_seed).unwrap_or(0),
            workers,
            target,
            first_trial: self.first_trial.unwrap_or(0),
        })
    }

    fn resolve_algorithm(&self, n: usize) -> Result<Algorithm, HarnessError> {
        let name = self.algorithm.as_deref().unwrap_or("heavy_tailed");
        match name {
            "heavy_tailed" => {
                let defaults = match self.preset.as_deref() {
                    None => None,
                    Some("recommended") => Some(HyperParams::recommended(n)),
                    Some(other) => {
                        return Err(field_error("preset", format!("unknown preset `{other}`")))
                    }
                };
                let pick = |v: Option<f64>, d: Option<f64>, field| {
                    v.or(d)
                        .ok_or_else(|| field_error(field, "required for heavy_tailed"))
                };
                let pick_u = |v: Option<u64>, d: Option<u64>, field| {
                    v.or(d)
                        .ok_or_else(|| field_error(field, "required for heavy_tailed"))
                };
                let hp = HyperParams {
                    beta_s: pick(self.beta_s, defaults.map(|h| h.beta_s), "beta_s")?,
                    u_s: pick_u(self.u_s, defaults.map(|h| h.u_s), "u_s")?,
                    beta_lambda: pick(
                        self.beta_lambda,
                        defaults.map(|h| h.beta_lambda),
                        "beta_lambda",
                    )?,
                    u_lambda: pick_u(self.u_lambda, defaults.map(|h| h.u_lambda), "u_lambda")?,
                };
                HeavyTailedGa::new(hp)
                    .map_err(|e| field_error("hyperparameters", e.to_string()))?;
                Ok(Algorithm::HeavyTailed(hp))
            }
            "static" => {
                let sp = self.resolve_static(n)?;
                sp.validate()
                    .map_err(|e| field_error("static parameters", e.to_string()))?;
                Ok(Algorithm::Static(sp))
            }
            "one_plus_one" => {
                let chi = self.chi.unwrap_or(1.0);
                if !(chi > 0.0 && chi <= n as f64) {
                    return Err(field_error("chi", "must lie in (0, n]"));
                }
                Ok(Algorithm::OnePlusOne { chi })
            }
            "one_plus_one_heavy" => {
                let beta = self.beta.unwrap_or(1.5);
                if !(beta.is_finite() && beta >= 0.0) {
                    return Err(field_error("beta", "must be finite and non-negative"));
                }
                Ok(Algorithm::OnePlusOneHeavy { beta })
            }
            other => Err(field_error(
                "algorithm",
                format!(
                    "unknown algorithm `{other}` (expected heavy_tailed, static, one_plus_one \
                     or one_plus_one_heavy)"
                ),
            )),
        }
    }

    fn resolve_static(&self, n: usize) -> Result<StaticParams, HarnessError> {
        let reference = || -> Result<u64, HarnessError> {
            let k = self
                .k
                .ok_or_else(|| field_error("lm", "required when no jump size k is given"))?;
            let lambda = exact::reference_lambda(n as u64, k as u64, LambdaRounding::Nearest);
            if lambda > u64::MAX as f64 {
                return Err(field_error("lm", "reference population size exceeds u64"));
            }
            Ok(lambda as u64)
        };
        let lm = match self.lm {
            Some(v) => v,
            None => reference()?,
        };
        let lc = self.lc.unwrap_or(lm);
        if let Some(delta) = self.delta {
            let k = self
                .k
                .ok_or_else(|| field_error("delta", "requires a jump size k"))?;
            let mut sp = StaticParams::from_delta(n, k, delta, lm);
            sp.lambda_c = lc;
            return Ok(sp);
        }
        Ok(StaticParams {
            p: self
                .p
                .ok_or_else(|| field_error("p", "required for static (or give delta)"))?,
            c: self
                .c
                .ok_or_else(|| field_error("c", "required for static (or give delta)"))?,
            lambda_m: lm,
            lambda_c: lc,
        })
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`; independent of scheduling.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix64(master ^ mix64(trial))
}

enum Runner {
    HeavyTailed(HeavyTailedGa),
    Static(StaticParams),
    OnePlusOne(Mutation),
}

impl Runner {
    fn new(algorithm: &Algorithm) -> Result<Self, HarnessError> {
        Ok(match *algorithm {
            Algorithm::HeavyTailed(hp) => Runner::HeavyTailed(HeavyTailedGa::new(hp)?),
            Algorithm::Static(sp) => Runner::Static(sp),
            Algorithm::OnePlusOne { chi } => Runner::OnePlusOne(Mutation::Standard { chi }),
            Algorithm::OnePlusOneHeavy { beta } => {
                Runner::OnePlusOne(Mutation::HeavyTailed { beta })
            }
        })
    }

    fn run(&self, cfg: &ExperimentConfig, seed: u64) -> Result<RunResult, EngineError> {
        let start = cfg.start.to_start();
        let limits = RunLimits {
            budget: cfg.budget,
            target: cfg.target,
        };
        match self {
            Runner::HeavyTailed(ga) => run_heavy_tailed(&cfg.problem, ga, &start, limits, seed),
            Runner::Static(sp) => run_static(&cfg.problem, sp, &start, limits, seed),
            Runner::OnePlusOne(m) => run_one_plus_one(&cfg.problem, *m, &start, limits, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty());
        let count = values.len() as f64;
        let mean = values.iter().sum::<f64>() / count;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len().is_multiple_of(2) {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        Self {
            mean,
            median,
            std: var.sqrt(),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }
}

/// `|mean(T_f) - 2 E[λ] mean(T_I)| / mean(T_f)` for heavy-tailed runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldCheck {
    pub expected_lambda: f64,
    pub deviation: f64,
    /// False only when enough trials were run and the deviation is too large.
    pub ok: bool,
}

impl WaldCheck {
    pub fn evaluate(
        expected_lambda: f64,
        mean_evals: f64,
        mean_iterations: f64,
        trials: u64,
    ) -> Self {
        let deviation = (mean_evals - 2.0 * expected_lambda * mean_iterations).abs() / mean_evals;
        Self {
            expected_lambda,
            deviation,
            ok: trials < WALD_MIN_TRIALS || deviation < WALD_TOLERANCE,
        }
    }
}

/// Summary over all trials; unsuccessful trials contribute the evaluations
/// they spent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub evaluations: Moments,
    pub iterations: Moments,
    /// 95% percentile-bootstrap interval of the mean of `T_f`.
    pub mean_evaluations_ci95: [f64; 2],
    pub wald: Option<WaldCheck>,
}

pub fn summarize(
    results: &[RunResult],
    bootstrap_seed: u64,
    expected_lambda: Option<f64>,
) -> SummaryStats {
    let evals: Vec<f64> = results.iter().map(|r| r.evaluations as f64).collect();
    let iters: Vec<f64> = results.iter().map(|r| r.iterations as f64).collect();
    let successes = results.iter().filter(|r| r.success).count() as u64;
    let trials = results.len() as u64;
    let evaluations = Moments::of(&evals);
    let iterations = Moments::of(&iters);
    let wald = expected_lambda
        .map(|el| WaldCheck::evaluate(el, evaluations.mean, iterations.mean, trials));
    SummaryStats {
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        evaluations,
        iterations,
        mean_evaluations_ci95: bootstrap_mean_ci(&evals, bootstrap_seed),
        wald,
    }
}

fn bootstrap_mean_ci(values: &[f64], seed: u64) -> [f64; 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = values.len();
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            (0..len)
                .map(|_| values[rng.random_range(0..len)])
                .sum::<f64>()
                / len as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (BOOTSTRAP_RESAMPLES - 1) as f64).round()) as usize];
    [at(0.025), at(0.975)]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub algorithm: &'static str,
    pub summary: SummaryStats,
    #[serde(skip)]
    pub results: Vec<RunResult>,
}

/// Runs every trial, handing each result to `on_trial` in trial order.
///
/// Trials run in chunks on a pool of `cfg.workers` threads; each trial's
/// seed depends only on `(master_seed, trial index)`.
pub fn run_experiment<F>(
    cfg: &ExperimentConfig,
    mut on_trial: F,
) -> Result<ExperimentReport, HarnessError>
where
    F: FnMut(u64, &RunResult) -> Result<(), HarnessError>,
{
    let runner = Runner::new(&cfg.algorithm)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| field_error("workers", e.to_string()))?;
    let chunk = (cfg.workers as u64 * 32).max(1);
    let end = cfg.first_trial + cfg.trials;
    let mut results = Vec::with_capacity(cfg.trials as usize);
    let mut lo = cfg.first_trial;
    while lo < end {
        let hi = (lo + chunk).min(end);
        let batch: Vec<Result<RunResult, EngineError>> = pool.install(|| {
            (lo..hi)
                .into_par_iter()
                .map(|t| runner.run(cfg, trial_seed(cfg.master_seed, t)))
                .collect()
        });
        for (t, r) in (lo..hi).zip(batch) {
            let r = r?;
            on_trial(t, &r)?;
            results.push(r);
        }
        lo = hi;
    }
    let expected_lambda = match &runner {
        Runner::HeavyTailed(ga) => Some(ga.lambda_distribution().expectation()),
        _ => None,
    };
    let summary = summarize(&results, mix64(cfg.master_seed ^ 0xB007), expected_lambda);
    Ok(ExperimentReport {
        algorithm: cfg.algorithm.name(),
        summary,
        results,
    })
}

/// Streams per-trial rows as CSV.
pub struct TrialCsvWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrialCsvWriter<W> {
    pub fn new(writer: W) -> Result<Self, HarnessError> {
        let mut inner = csv::Writer::from_writer(writer);
        inner.write_record(TRIAL_CSV_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, trial: u64, r: &RunResult) -> Result<(), HarnessError> {
        self.inner.write_record([
            TRIAL_CSV_SCHEMA.to_string(),
            trial.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.evaluations.to_string(),
            r.success.to_string(),
            r.best_fitness.to_string(),
        ])?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, HarnessError> {
        self.inner
            .into_inner()
            .map_err(|e| HarnessError::Io(e.into_error()))
    }
}

/// Per-trial CSV of a whole experiment as bytes.
pub fn trials_csv(cfg: &ExperimentConfig) -> Result<Vec<u8>, HarnessError> {
    let mut writer = TrialCsvWriter::new(Vec::new())?;
    run_experiment(cfg, |t, r| writer.write(t, r))?;
    writer.into_inner()
}

pub fn write_exact_csv<W: Write>(points: &[ExactPoint], writer: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(exact::EXACT_CSV_HEADER)?;
    for p in points {
        for (name, v) in [
            ("log_P", p.log_p),
            ("expected_evals", p.expected_evals),
            ("ratio", p.ratio),
        ] {
            if !v.is_finite() {
                return Err(HarnessError::NonFinite(format!(
                    "{name} at n={}, k={}, delta={}",
                    p.n, p.k, p.delta
                )));
            }
        }
        w.write_record(p.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Reference runtime ratios `(k, δ, ratio)` at `n = 2^20`, four significant digits.
pub const REFERENCE_RATIOS: &[(u64, f64, f64)] = &[
    (4, -8.5, 2.409e+08),
    (4, -8.0, 5.148e+07),
    (4, -7.5, 1.238e+07),
    (4, -7.0, 3.083e+06),
    (4, -6.5, 7.706e+05),
    (4, -6.0, 1.926e+05),
    (4, -5.5, 4.816e+04),
    (4, -5.0, 1.204e+04),
    (4, -4.5, 3.010e+03),
    (4, -4.0, 7.525e+02),
    (4, -3.5, 1.881e+02),
    (4, -3.0, 4.704e+01),
    (4, -2.5, 1.176e+01),
    (4, -2.0, 2.983e+00),
    (4, -1.5, 1.080e+00),
    (4, -1.0, 7.476e-01),
    (4, -0.5, 7.351e-01),
    (4, 0.0, 1.000e+00),
    (4, 0.5, 2.550e+00),
    (4, 1.0, 9.998e+00),
    (4, 1.5, 4.002e+01),
    (4, 2.0, 1.602e+02),
    (4, 2.5, 6.411e+02),
    (4, 3.0, 2.565e+03),
    (4, 3.5, 1.026e+04),
    (4, 4.0, 4.107e+04),
    (4, 4.5, 1.643e+05),
    (4, 5.0, 6.572e+05),
    (4, 5.5, 2.629e+06),
    (4, 6.0, 1.052e+07),
    (4, 6.5, 4.207e+07),
    (4, 7.0, 1.683e+08),
    (4, 7.5, 6.731e+08),
    (4, 8.0, 2.693e+09),
    (4, 8.5, 1.077e+10),
    (16, -7.5, 1.014e+29),
    (16, -7.0, 3.726e+26),
    (16, -6.5, 1.454e+24),
    (16, -6.0, 5.681e+21),
    (16, -5.5, 2.219e+19),
    (16, -5.0, 8.669e+16),
    (16, -4.5, 3.386e+14),
    (16, -4.0, 1.323e+12),
    (16, -3.5, 5.167e+09),
    (16, -3.0, 2.018e+07),
    (16, -2.5, 7.884e+04),
    (16, -2.0, 3.080e+02),
    (16, -1.5, 1.496e+00),
    (16, -1.0, 6.398e-01),
    (16, -0.5, 6.384e-01),
    (16, 0.0, 1.000e+00),
    (16, 0.5, 1.561e+02),
    (16, 1.0, 4.048e+04),
    (16, 1.5, 1.046e+07),
    (16, 2.0, 2.695e+09),
    (16, 2.5, 6.930e+11),
    (16, 3.0, 1.780e+14),
    (16, 3.5, 4.567e+16),
    (16, 4.0, 1.171e+19),
    (16, 4.5, 3.001e+21),
    (16, 5.0, 7.689e+23),
    (16, 5.5, 1.969e+26),
    (16, 6.0, 5.044e+28),
    (16, 6.5, 1.292e+31),
    (16, 7.0, 3.307e+33),
    (16, 7.5, 8.468e+35),
    (64, -6.5, 1.824e+97),
    (64, -6.0, 4.242e+87),
    (64, -5.5, 9.876e+77),
    (64, -5.0, 2.299e+68),
    (64, -4.5, 5.354e+58),
    (64, -4.0, 1.246e+49),
    (64, -3.5, 2.902e+39),
    (64, -3.0, 6.757e+29),
    (64, -2.5, 1.573e+20),
    (64, -2.0, 3.663e+10),
    (64, -1.5, 9.193e+00),
    (64, -1.0, 6.699e-01),
    (64, -0.5, 6.699e-01),
    (64, 0.0, 1.000e+00),
    (64, 0.5, 2.026e+09),
    (64, 1.0, 9.657e+18),
    (64, 1.5, 4.464e+28),
    (64, 2.0, 2.019e+38),
    (64, 2.5, 8.997e+47),
    (64, 3.0, 3.966e+57),
    (64, 3.5, 1.735e+67),
    (64, 4.0, 7.548e+76),
    (64, 4.5, 3.271e+86),
    (64, 5.0, 1.414e+96),
    (64, 5.5, 6.102e+105),
    (64, 6.0, 2.629e+115),
    (64, 6.5, 1.132e+125),
];

pub const FIGURE2_N: u64 = 1 << 20;
pub const FIGURE2_KS: [u64; 3] = [4, 16, 64];

/// Full δ sweep for one `k` at `n = 2^20`.
pub fn figure2_table(k: u64, rounding: LambdaRounding) -> Result<Vec<ExactPoint>, HarnessError> {
    let deltas = exact::delta_grid(FIGURE2_N, k);
    Ok(exact::figure2_sweep(FIGURE2_N, k, &deltas, rounding)?)
}

/// Two-panel SVG of `log2(ratio)` against δ: the whole grid, and δ ∈ [-2.5, 1].
pub fn figure2_svg(series: &[(u64, Vec<ExactPoint>)]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">"#,
        2.0 * W,
        H
    );
    let panels = [
        (0.0, (-10.0, 10.0), None),
        (W, (-2.5, 1.0), Some((-1.0, 8.0))),
    ];
    for (x0, (dmin, dmax), ylim) in panels {
        let visible = |p: &&ExactPoint| p.delta >= dmin && p.delta <= dmax;
        let logs: Vec<f64> = series
            .iter()
            .flat_map(|(_, pts)| pts.iter().filter(visible).map(|p| p.ratio.log2()))
            .collect();
        let (ymin, ymax) = ylim.unwrap_or_else(|| {
            let lo = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
            let hi = logs
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
                .ceil();
            (lo, hi.max(lo + 1.0))
        });
        let sx = |d: f64| x0 + PAD + (d - dmin) / (dmax - dmin) * (W - 2.0 * PAD);
        let sy = |v: f64| H - PAD - (v - ymin) / (ymax - ymin) * (H - 2.0 * PAD);
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x0 + PAD,
            PAD,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">delta</text><text x="{}" y="{}" transform="rotate(-90 {} {})" text-anchor="middle">log2 E[T]/E[T_opt]</text>"#,
            x0 + W / 2.0,
            H - 12.0,
            x0 + 14.0,
            H / 2.0,
            x0 + 14.0,
            H / 2.0
        );
        for (i, (k, pts)) in series.iter().enumerate() {
            let path: Vec<String> = pts
                .iter()
                .filter(visible)
                .map(|p| (p.delta, p.ratio.log2()))
                .filter(|&(_, v)| v >= ymin && v <= ymax)
                .map(|(d, v)| format!("{:.2},{:.2}", sx(d), sy(v)))
                .collect();
            let color = COLORS[i % COLORS.len()];
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                path.join(" ")
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" fill="{color}">k = {k}</text>"#,
                x0 + PAD + 8.0,
                PAD + 16.0 + 14.0 * i as f64
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Hyperparameter grid crossed by [`run_sweep`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepGrid {
    pub beta_s: Vec<f64>,
    pub u_s: Vec<u64>,
    pub beta_lambda: Vec<f64>,
    pub u_lambda: Vec<u64>,
}

impl SweepGrid {
    pub fn points(&self) -> Vec<HyperParams> {
        let mut out = Vec::new();
        for &beta_s in &self.beta_s {
            for &u_s in &self.u_s {
                for &beta_lambda in &self.beta_lambda {
                    for &u_lambda in &self.u_lambda {
                        out.push(HyperParams {
                            beta_s,
                            u_s,
                            beta_lambda,
                            u_lambda,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub hp: HyperParams,
    pub summary: SummaryStats,
    /// Exact `E[T_f]` from the local optimum, when it can be summed.
    pub predicted_evals: Option<f64>,
}

pub const SWEEP_CSV_HEADER: [&str; 10] = [
    "beta_s",
    "u_s",
    "beta_lambda",
    "u_lambda",
    "trials",
    "success_rate",
    "mean_evals",
    "median_evals",
    "mean_iterations",
    "predicted_evals",
];

/// Work bound (support points times ℓ terms) for attaching exact predictions.
const SWEEP_EXACT_WORK: f64 = 1e9;

/// Runs the heavy-tailed GA of `base` once per grid point.
pub fn run_sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>, HarnessError> {
    grid.points()
        .into_iter()
        .map(|hp| {
            let cfg = ExperimentConfig {
                algorithm: Algorithm::HeavyTailed(hp),
                ..base.clone()
            };
            let report = run_experiment(&cfg, |_, _| Ok(()))?;
            let predicted_evals = match (cfg.problem, cfg.start) {
                (Problem::Jump(params), StartKind::LocalOptimum)
                    if (hp.u_s as f64) * (hp.u_lambda as f64) * params.n() as f64
                        <= SWEEP_EXACT_WORK =>
                {
                    Some(exact::escape_probability_heavy_tailed(params, &hp)?.expected_evals)
                }
                _ => None,
            };
            Ok(SweepRow {
                hp,
                summary: report.summary,
                predicted_evals,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], writer: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_CSV_HEADER)?;
    for row in rows {
        let g = |x: f64| format!("{x:.16e}");
        w.write_record([
            g(row.hp.beta_s),
            row.hp.u_s.to_string(),
            g(row.hp.beta_lambda),
            row.hp.u_lambda.to_string(),
            row.summary.trials.to_string(),
            g(row.summary.success_rate),
            g(row.summary.evaluations.mean),
            g(row.summary.evaluations.median),
            g(row.summary.iterations.mean),
            row.predicted_evals.map(g).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfTestCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Quick consistency checks: a few reference ratios, and a small Monte Carlo
/// escape frequency against the exact probability.
pub fn selftest() -> Vec<SelfTestCheck> {
    let mut checks = Vec::new();
    for &(k, delta, want) in REFERENCE_RATIOS
        .iter()
        .filter(|&&(_, d, _)| d == 0.5 || d == -1.0)
    {
        let lambda = exact::reference_lambda(FIGURE2_N, k, LambdaRounding::Nearest);
        let outcome = exact::exact_point(FIGURE2_N, k, 0.0, lambda, None).and_then(|base| {
            exact::exact_point(FIGURE2_N, k, delta, lambda, Some(base.log_expected_evals))
        });
        let (passed, detail) = match outcome {
            Ok(p) => {
                let rel = (p.ratio / want - 1.0).abs();
                (
                    rel <= 1e-3,
                    format!("ratio {:.4e} vs {want:.4e} (rel {rel:.1e})", p.ratio),
                )
            }
            Err(e) => (false, e.to_string()),
        };
        checks.push(SelfTestCheck {
            name: format!("reference ratio k={k} delta={delta}"),
            passed,
            detail,
        });
    }

    let params = JumpParams::new(12, 2).expect("valid jump");
    let rate = (2.0f64 / 12.0).sqrt();
    let sp = StaticParams {
        p: rate,
        c: rate,
        lambda_m: 4,
        lambda_c: 4,
    };
    let iterations = 100_000u64;
    let problem = Problem::Jump(params);
    let mut rng = crate::engine::rng_for_seed(2024);
    let mut hits = 0u64;
    for _ in 0..iterations {
        let mut x = crate::objective::local_optimum_start(params, &mut rng);
        crate::engine::static_step(
            &mut x,
            &problem,
            &sp,
            Default::default(),
            u64::MAX,
            &mut rng,
        )
        .expect("unbounded budget");
        hits += (x.ones() == 12) as u64;
    }
    let prob = exact::escape_probability_static(params, &(&sp).into())
        .map(f64::exp)
        .unwrap_or(f64::NAN);
    let sigma = (prob * (1.0 - prob) / iterations as f64).sqrt();
    let freq = hits as f64 / iterations as f64;
    checks.push(SelfTestCheck {
        name: "monte carlo escape n=12 k=2".into(),
        passed: (freq - prob).abs() <= 3.0 * sigma,
        detail: format!("frequency {freq:.5} vs exact {prob:.5} (sigma {sigma:.1e})"),
    });
    checks
}
