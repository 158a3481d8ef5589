//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error (nothing
//! written), 3 truncation above the configured cap.

use crate::environment::valley::valley_pairs_on;
use crate::error::{Error, Result};
use crate::harness::{self, parse_override, validate_config, Experiment, ExperimentReport};
use crate::oracle::j0_constant;
use crate::path::io::read_path_csv;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TRUNCATED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "broxlab", version, about = "Brox diffusion simulation and verification lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Occupation normalization of the local-time estimators.
    Simulate(RunArgs),
    /// Minus-valley pairs (b, m) of a path read from CSV.
    Valley(ValleyArgs),
    /// Probability of the good-environment events along the v grid.
    Gamma(RunArgs),
    /// Local time at first passage and at inverse local time, W = 0.
    RayKnight(RunArgs),
    /// Valley shape against 3-d Bessel functionals.
    Tanaka(RunArgs),
    /// Ladder heights and integrals.
    Ladder(RunArgs),
    /// L* at time e^v between the valley integrals.
    Sandwich(RunArgs),
    /// Occupation of the valley neighbourhoods.
    Localization(RunArgs),
    /// Local-time profile at the composite inverse local time.
    Profile(RunArgs),
    /// First positive zero of J0.
    J0,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config key, applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Directory for the report files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replicate pool size (0: one per core).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Base seed; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Validate and print the normalized config without running.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct ValleyArgs {
    /// CSV with columns x,w.
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value_t = 3)]
    pub count: usize,
}

impl Command {
    fn experiment(&self) -> Option<(Experiment, &RunArgs)> {
        Some(match self {
            Command::Simulate(a) => (Experiment::Simulate, a),
            Command::Gamma(a) => (Experiment::Gamma, a),
            Command::RayKnight(a) => (Experiment::RayKnight, a),
            Command::Tanaka(a) => (Experiment::Tanaka, a),
            Command::Ladder(a) => (Experiment::Ladder, a),
            Command::Sandwich(a) => (Experiment::Sandwich, a),
            Command::Localization(a) => (Experiment::Localization, a),
            Command::Profile(a) => (Experiment::Profile, a),
            Command::Valley(_) | Command::J0 => return None,
        })
    }
}

/// Parse `argv` (including the program name), run, and return the exit
/// code. Diagnostics go to standard error.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::InvalidParams(_) | Error::Parse(_) => EXIT_CONFIG,
                _ => EXIT_FAIL,
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<i32> {
    match cmd {
        Command::J0 => {
            println!("{}", j0_constant());
            Ok(EXIT_OK)
        }
        Command::Valley(a) => {
            let path = read_path_csv(&a.path).map_err(|e| match e {
                Error::Io(err) => Error::InvalidConfig(format!("cannot read {}: {err}", a.path.display())),
                other => other,
            })?;
            let (pairs, complete) = valley_pairs_on(&path, a.threshold, a.count)?;
            let out = serde_json::json!({ "threshold": a.threshold, "count": a.count, "complete": complete, "pairs": pairs });
            println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            Ok(EXIT_OK)
        }
        _ => {
            let (experiment, args) = cmd.experiment().expect("experiment subcommand");
            run_experiment(experiment, args)
        }
    }
}

/// Config text and overrides for an experiment subcommand.
pub fn resolve_config(experiment: Experiment, args: &RunArgs) -> Result<harness::ExperimentConfig> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::InvalidConfig(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    if let Ok(Value::Object(m)) = serde_json::from_str::<Value>(&text) {
        if let Some(Value::String(name)) = m.get("experiment") {
            if name != experiment.name() {
                return Err(Error::InvalidConfig(format!(
                    "config is for experiment `{name}` but the subcommand is `{experiment}`"
                )));
            }
        }
    }
    let mut overrides = vec![("experiment".to_string(), Value::String(experiment.name().into()))];
    for s in &args.set {
        overrides.push(parse_override(s)?);
    }
    if let Some(seed) = args.seed {
        overrides.push(("base_seed".into(), Value::from(seed)));
    }
    if let Some(w) = args.workers {
        overrides.push(("workers".into(), Value::from(w)));
    }
    if let Some(out) = &args.out {
        overrides.push(("output".into(), Value::String(out.display().to_string())));
    }
    validate_config(&text, &overrides)
}

fn run_experiment(experiment: Experiment, args: &RunArgs) -> Result<i32> {
    let cfg = resolve_config(experiment, args)?;
    if args.check {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("json"));
        return Ok(EXIT_OK);
    }
    let report = harness::run(&cfg)?;
    let dir = PathBuf::from(cfg.output.clone().unwrap_or_else(|| ".".into()));
    write_report(&report, &dir)?;
    print!("{}", report.summary());
    Ok(report.exit_code())
}

fn write_report(report: &ExperimentReport, dir: &std::path::Path) -> Result<()> {
    let (json, csv) = report.write(dir)?;
    eprintln!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}
