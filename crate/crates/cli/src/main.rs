use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use htga::exact::{self, EscapeParams, LambdaRounding};
use htga::harness::{self, ConfigFile, HarnessError, StartKind, SweepGrid, TrialCsvWriter};
use htga::JumpParams;

#[derive(Parser)]
#[command(
    name = "htga",
    version,
    about = "Heavy-tailed (1+(λ,λ)) GA experiments and exact runtime analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run independent trials and write one CSV row per trial.
    Run(RunArgs),
    /// Exact escape probability and expected runtime of one static setting.
    Exact(ExactArgs),
    /// Runtime ratios over the δ grid at n = 2^20.
    Figure2(Figure2Args),
    /// Cross hyperparameter grids of the heavy-tailed GA.
    Sweep(SweepArgs),
    /// Quick consistency checks.
    Selftest,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Jump size; omit for OneMax.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    start: Option<StartArg>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    /// Master seed; falls back to HTGA_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Stop at this many one-bits instead of at the optimum.
    #[arg(long)]
    target_ones: Option<usize>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    beta_s: Option<f64>,
    #[arg(long)]
    u_s: Option<u64>,
    #[arg(long)]
    beta_lambda: Option<f64>,
    #[arg(long)]
    u_lambda: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    lm: Option<u64>,
    #[arg(long)]
    lc: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Mutation strength of the standard (1+1) EA.
    #[arg(long)]
    chi: Option<f64>,
    /// Power-law exponent of the heavy-tailed (1+1) EA.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    first_trial: Option<u64>,
    /// Write the JSON summary here as well as to stderr.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Sets p = 2^δ sqrt(k/n) and c = 2^-δ sqrt(k/n).
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["p", "c"])]
    delta: Option<f64>,
    /// Mutation population size (default: sqrt(n/k)^k, rounded).
    #[arg(long)]
    lm: Option<f64>,
    /// Crossover population size (default: λ_m).
    #[arg(long)]
    lc: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Figure2Args {
    /// Restrict to one jump size (default: 4, 16 and 64).
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, value_enum, default_value = "nearest")]
    rounding: RoundingArg,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render both panels as SVG to this path.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    beta_s: Vec<f64>,
    /// Defaults to n.
    #[arg(long, value_delimiter = ',')]
    u_s: Vec<u64>,
    #[arg(long, value_delimiter = ',', required = true)]
    beta_lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    u_lambda: Vec<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    HeavyTailed,
    Static,
    OnePlusOne,
    OnePlusOneHeavy,
}

#[derive(Clone, Copy, ValueEnum)]
enum StartArg {
    Random,
    LocalOptimum,
    AllOnes,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Recommended,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    Nearest,
    Floor,
    Ceil,
}

impl From<StartArg> for StartKind {
    fn from(s: StartArg) -> Self {
        match s {
            StartArg::Random => StartKind::Random,
            StartArg::LocalOptimum => StartKind::LocalOptimum,
            StartArg::AllOnes => StartKind::AllOnes,
        }
    }
}

impl From<RoundingArg> for LambdaRounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Nearest => LambdaRounding::Nearest,
            RoundingArg::Floor => LambdaRounding::Floor,
            RoundingArg::Ceil => LambdaRounding::Ceil,
        }
    }
}

impl CommonArgs {
    fn to_config(&self) -> ConfigFile {
        ConfigFile {
            n: self.n,
            k: self.k,
            start: self.start.map(Into::into),
            trials: self.trials,
            budget: self.budget,
            seed: self.seed,
            workers: self.workers,
            target_ones: self.target_ones,
            ..Default::default()
        }
    }
}

impl RunArgs {
    fn to_config(&self) -> ConfigFile {
        let algorithm = self.algorithm.map(|a| {
            match a {
                AlgorithmArg::HeavyTailed => "heavy_tailed",
                AlgorithmArg::Static => "static",
                AlgorithmArg::OnePlusOne => "one_plus_one",
                AlgorithmArg::OnePlusOneHeavy => "one_plus_one_heavy",
            }
            .to_string()
        });
        ConfigFile {
            algorithm,
            preset: self.preset.map(|_| "recommended".to_string()),
            beta_s: self.beta_s,
            u_s: self.u_s,
            beta_lambda: self.beta_lambda,
            u_lambda: self.u_lambda,
            p: self.p,
            c: self.c,
            lm: self.lm,
            lc: self.lc,
            delta: self.delta,
            chi: self.chi,
            beta: self.beta,
            first_trial: self.first_trial,
            ..self.common.to_config()
        }
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("HTGA_SEED") {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| {
            format!("HTGA_SEED must be an unsigned integer, got `{v}`")
        })?)),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("HTGA_SEED: {e}"),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let cfg = file.merge(args.to_config()).resolve(env_seed()?)?;
    let mut writer = TrialCsvWriter::new(output(args.common.out.as_deref())?)?;
    let report = harness::run_experiment(&cfg, |t, r| writer.write(t, r))?;
    writer.into_inner()?.flush()?;
    let s = &report.summary;
    if let Some(w) = s.wald.filter(|w| !w.ok) {
        eprintln!(
            "warning: Wald identity deviates by {:.4} (tolerance {})",
            w.deviation,
            harness::WALD_TOLERANCE
        );
    }
    let json = serde_json::to_string_pretty(&report)?;
    eprintln!("{json}");
    if let Some(path) = &args.summary {
        std::fs::write(path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if !(s.evaluations.mean.is_finite() && s.iterations.mean.is_finite()) {
        bail!("summary statistics are not finite");
    }
    Ok(())
}

fn cmd_exact(args: &ExactArgs) -> Result<()> {
    let params = JumpParams::new(args.n as usize, args.k as usize)?;
    let (p, c, delta) = match (args.delta, args.p, args.c) {
        (Some(d), _, _) => {
            let (p, c) = exact::perturbed_rates(args.n, args.k, d);
            (p, c, d)
        }
        (None, Some(p), Some(c)) => (p, c, 0.5 * (p / c).log2()),
        _ => bail!("give either --delta or both --p and --c"),
    };
    let lambda_m = args
        .lm
        .unwrap_or_else(|| exact::reference_lambda(args.n, args.k, LambdaRounding::Nearest));
    let sp = EscapeParams {
        p,
        c,
        lambda_m,
        lambda_c: args.lc.unwrap_or(lambda_m),
    };
    let point = exact::evaluate_point(params, sp, delta, None)?;
    harness::write_exact_csv(&[point], output(args.out.as_deref())?)?;
    Ok(())
}

fn cmd_figure2(args: &Figure2Args) -> Result<()> {
    let ks: Vec<u64> = match args.k {
        Some(k) => vec![k],
        None => harness::FIGURE2_KS.to_vec(),
    };
    let series = ks
        .iter()
        .map(|&k| Ok((k, harness::figure2_table(k, args.rounding.into())?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let all: Vec<_> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().copied())
        .collect();
    harness::write_exact_csv(&all, output(args.out.as_deref())?)?;
    if let Some(path) = &args.plot {
        std::fs::write(path, harness::figure2_svg(&series))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let base = ConfigFile {
        preset: Some("recommended".into()),
        ..args.common.to_config()
    }
    .resolve(env_seed()?)?;
    let grid = SweepGrid {
        beta_s: args.beta_s.clone(),
        u_s: if args.u_s.is_empty() {
            vec![base.problem.n() as u64]
        } else {
            args.u_s.clone()
        },
        beta_lambda: args.beta_lambda.clone(),
        u_lambda: args.u_lambda.clone(),
    };
    let rows = harness::run_sweep(&base, &grid)?;
    harness::write_sweep_csv(&rows, output(args.common.out.as_deref())?)?;
    Ok(())
}

fn cmd_selftest() -> Result<()> {
    let checks = harness::selftest();
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} self-test check(s) failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Figure2(a) => cmd_figure2(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<HarnessError>() {
                Some(HarnessError::ConfigRead { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
