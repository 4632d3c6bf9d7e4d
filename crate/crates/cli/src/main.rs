//! `dephasing`: CSV data and validation reports for the measurement scheme.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod backend;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dephasing_core::params::{parse_config, ConfigError, SchemeConfig};
use thiserror::Error;

const THREADS_ENV: &str = "DEPHASING_THREADS";

#[derive(Debug, Parser)]
#[command(name = "dephasing", version, about = "Measurement-based control of qubit pure dephasing")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML config file (flat key = value pairs).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set temperature_k=70`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out", global = true)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral function G(k) and optionally its equally spaced discretization.
    Gk(commands::GkArgs),
    /// Average gain against the delay τ at fixed post-measurement time.
    GainTau(commands::GainTauArgs),
    /// Coherence against post-measurement time at special delay points.
    CoherenceT(commands::CoherenceTArgs),
    /// Weyl engine against the dense oracle on one or two modes.
    OracleCompare(commands::OracleCompareArgs),
    /// Minimum average gain over seeded random environments.
    TheoremCheck(commands::TheoremCheckArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            _ => 1,
        }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> Self {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }
}

/// Config file plus `--set` overrides, merged key by key before parsing.
fn resolve_config(common: &Common) -> Result<SchemeConfig, CliError> {
    let mut table = match &common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
            text.parse::<toml::Table>().map_err(|e| ConfigError::Syntax(e.to_string()))?
        }
        None => toml::Table::new(),
    };
    for item in &common.overrides {
        let (key, raw) =
            item.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_owned()));
        table.insert(key.trim().to_owned(), value);
    }
    Ok(parse_config(&table.to_string())?)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize =
        raw.parse().map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = resolve_config(&cli.common)?;
    std::fs::create_dir_all(&cli.common.out).map_err(CliError::io(format!("creating {}", cli.common.out.display())))?;
    let out = output::OutDir::new(cli.common.out.clone());
    match cli.command {
        Command::Gk(args) => commands::gk(&cfg, &args, out),
        Command::GainTau(args) => commands::gain_tau(&cfg, &args, out),
        Command::CoherenceT(args) => commands::coherence_t(&cfg, &args, out),
        Command::OracleCompare(args) => commands::oracle_compare(&cfg, &args, out),
        Command::TheoremCheck(args) => commands::theorem_check(&cfg, &args, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
