//! `run`, `resume` and `sweep` subcommands.
//!
//! Exit codes: 0 when the run completes (whatever its success rate), 2 for
//! configuration errors, 3 for dataset errors, 1 for anything else. A run
//! directory holds `config.json`, `ledger.jsonl`, `report.json` and
//! `curves.{csv,json}`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{BackendKind, ConfigFile, SetupError};
use crate::cost::MoneyUsd;
use crate::engine::{EngineError, RunReport};
use crate::metrics::{self, Axis, Format};
use crate::types::{Method, Task};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATASET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "retrials", version, about = "Budget-constrained retrials of LLM reasoning strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment from a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Continue an interrupted run from its directory.
    Resume { run_dir: PathBuf },
    /// Run one experiment per temperature and write a combined curve file.
    Sweep {
        config: PathBuf,
        /// Comma-separated, e.g. `0.3,0.7,1.0`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        temperatures: Vec<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Flags win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub task: Option<Task>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Budget in US dollars, e.g. `0.05`.
    #[arg(long)]
    pub budget: Option<MoneyUsd>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_trials: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, c: &mut ConfigFile) {
        if let Some(v) = self.task {
            c.task = v;
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.budget {
            c.budget = v;
        }
        if let Some(v) = self.temperature {
            c.temperature = v;
        }
        if let Some(v) = self.max_trials {
            c.max_trials = Some(v);
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.backend {
            c.backend = v;
        }
        if let Some(v) = self.concurrency {
            c.concurrency = v;
        }
        if let Some(v) = &self.out {
            c.out = std::path::absolute(v).unwrap_or_else(|_| v.clone());
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<SetupError> for CliError {
    fn from(e: SetupError) -> Self {
        let code = match e {
            SetupError::Config(_) => EXIT_CONFIG,
            SetupError::Dataset(_) | SetupError::Docs(_) => EXIT_DATASET,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Config(_) | EngineError::ConfigMismatch { .. } | EngineError::Verifier(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        };
        CliError { code, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError { code: EXIT_FAILURE, message: format!("{}: {e}", path.display()) }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, overrides } => {
            let mut c = ConfigFile::load(config)?;
            overrides.apply(&mut c);
            cmd_run(&c).map(|_| ())
        }
        Command::Resume { run_dir } => cmd_resume(run_dir).map(|_| ()),
        Command::Sweep { config, temperatures, overrides } => {
            let mut c = ConfigFile::load(config)?;
            overrides.apply(&mut c);
            cmd_sweep(&c, temperatures).map(|_| ())
        }
    }
}

fn write_outputs(run_dir: &Path, report: &RunReport) -> Result<(), CliError> {
    write(&run_dir.join("report.json"), &report.to_json())?;
    let curve = metrics::success_curve(report, Axis::Cost);
    for (format, name) in [(Format::Csv, "curves.csv"), (Format::Json, "curves.json")] {
        let path = run_dir.join(name);
        metrics::emit(&curve, format, &path).map_err(|e| io_error(&path, e))?;
    }
    Ok(())
}

fn summarize(run_id: &str, report: &RunReport) {
    eprintln!(
        "{run_id}: {}/{} solved ({} {:.4}) over {} trials, {} attempts, cost ${} of ${}",
        report.solved,
        report.total,
        report.metric,
        report.success_rate,
        report.trials.len(),
        report.attempts,
        report.total_cost,
        report.config.budget_limit
    );
}

/// Runs one experiment and writes its run directory. Returns the directory.
pub fn cmd_run(config: &ConfigFile) -> Result<(PathBuf, RunReport), CliError> {
    let prepared = config.prepare()?;
    fs::create_dir_all(&prepared.run_dir).map_err(|e| io_error(&prepared.run_dir, e))?;
    write(&prepared.run_dir.join("config.json"), &config.to_json())?;
    eprintln!("running {} into {}", prepared.run_id, prepared.run_dir.display());
    let outcome = prepared.experiment.run()?;
    write_outputs(&prepared.run_dir, &outcome.report)?;
    summarize(&prepared.run_id, &outcome.report);
    Ok((prepared.run_dir, outcome.report))
}

/// Continues the run in `run_dir` under its snapshotted config.
pub fn cmd_resume(run_dir: &Path) -> Result<RunReport, CliError> {
    let config = ConfigFile::load(&run_dir.join("config.json"))?;
    let prepared = config.prepare()?;
    let experiment = prepared.experiment.with_ledger(run_dir.join("ledger.jsonl"));
    eprintln!("resuming {} in {}", prepared.run_id, run_dir.display());
    let outcome = experiment.resume()?;
    write_outputs(run_dir, &outcome.report)?;
    summarize(&prepared.run_id, &outcome.report);
    Ok(outcome.report)
}

/// One run per temperature, then `<out>/sweep-<task>-<method>-s<seed>.csv`.
pub fn cmd_sweep(config: &ConfigFile, temperatures: &[f64]) -> Result<PathBuf, CliError> {
    if temperatures.is_empty() {
        return Err(CliError { code: EXIT_CONFIG, message: "sweep needs at least one temperature".into() });
    }
    let mut reports = Vec::new();
    for &t in temperatures {
        let mut c = config.clone();
        c.temperature = t;
        reports.push(cmd_run(&c)?.1);
    }
    let families = metrics::temperature_sweep(&reports, Axis::Cost)
        .map_err(|e| CliError { code: EXIT_CONFIG, message: e.to_string() })?;
    let points: Vec<_> = families.into_iter().flat_map(|f| f.points).collect();
    let path = config.out.join(format!("sweep-{}-{}-s{}.csv", config.task, config.method, config.seed));
    fs::create_dir_all(&config.out).map_err(|e| io_error(&config.out, e))?;
    metrics::emit(&points, Format::Csv, &path).map_err(|e| io_error(&path, e))?;
    eprintln!("sweep curves written to {}", path.display());
    Ok(path)
}
