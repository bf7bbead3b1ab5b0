mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::io::CliError;

#[derive(Parser, Debug, Serialize)]
#[command(name = "tensorreg", version, about = "Tucker tensor regression, forecasting and residual analysis")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct Global {
    /// Seed for every random draw; falls back to TENSORREG_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid cells and seeds. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// key = value file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Leave the timestamp out of JSON summaries.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Directory for CSV/JSON/DTF outputs. Without it only the summary is printed.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Fit one Tucker regression.
    #[command(args_override_self = true)]
    Fit(commands::FitArgs),
    /// BIC grid search over ranks and penalties.
    #[command(args_override_self = true)]
    Select(commands::SelectArgs),
    /// Recover a smooth synthetic coefficient and report compression.
    #[command(args_override_self = true)]
    SimulateRecovery(commands::RecoveryArgs),
    /// Collinear design, BIC selection frequencies over seeds.
    #[command(args_override_self = true)]
    SimulateCollinearity(commands::CollinearityArgs),
    /// Fit a tensor autoregression and forecast ahead.
    #[command(args_override_self = true)]
    TarForecast(commands::TarArgs),
    /// TAR against per-block VAR(1) with Diebold-Mariano tests.
    #[command(args_override_self = true)]
    Compare(commands::CompareArgs),
    /// Separable residual correlations and biplot loadings.
    #[command(args_override_self = true)]
    ResidualCov(commands::ResidualArgs),
    /// Diebold-Mariano test on two forecast error files.
    #[command(args_override_self = true)]
    Dm(commands::DmArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Select(_) => "select",
            Command::SimulateRecovery(_) => "simulate-recovery",
            Command::SimulateCollinearity(_) => "simulate-collinearity",
            Command::TarForecast(_) => "tar-forecast",
            Command::Compare(_) => "compare",
            Command::ResidualCov(_) => "residual-cov",
            Command::Dm(_) => "dm",
        }
    }
}

/// Global options whose values are separate tokens, needed to find the
/// subcommand position in argv.
const VALUE_GLOBALS: [&str; 4] = ["--seed", "--jobs", "--config", "--out"];

/// Position of the subcommand token, skipping global options and their values.
fn subcommand_position(argv: &[String]) -> Option<usize> {
    let root = Cli::command();
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].as_str();
        if root.find_subcommand(a).is_some() {
            return Some(i);
        }
        i += if VALUE_GLOBALS.contains(&a) { 2 } else { 1 };
    }
    None
}

/// The `--config` path, wherever it appears.
fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Rebuilds argv with config entries placed right after the subcommand, so any
/// later occurrence on the command line wins.
fn merge_config(argv: &[String], at: usize, path: &PathBuf) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {}", path.display(), e)))?;
    let entries = tensorreg::ingest::parse_config(&text).map_err(|e| CliError::usage(e.to_string()))?;
    let root = Cli::command();
    let sub = argv[at].as_str();
    let cmd = root.find_subcommand(sub).expect("subcommand position was checked");
    let mut injected = Vec::new();
    for (key, value) in entries {
        let long = key.replace('_', "-");
        if long == "config" {
            return Err(CliError::usage("config files cannot include other config files"));
        }
        let arg = cmd
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(long.as_str()))
            .ok_or_else(|| CliError::usage(format!("unknown config key '{}' for {}", key, sub)))?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{}={}", long, value));
        } else {
            match value.as_str() {
                "true" => injected.push(format!("--{}", long)),
                "false" => {}
                other => return Err(CliError::usage(format!("config key '{}' expects true or false, got '{}'", key, other))),
            }
        }
    }
    let mut merged = argv[..=at].to_vec();
    merged.extend(injected);
    merged.extend(argv[at + 1..].iter().cloned());
    Ok(merged)
}

fn parse_cli(argv: &[String]) -> Result<Cli, CliError> {
    match (config_path(argv), subcommand_position(argv)) {
        (Some(path), Some(at)) => {
            let merged = merge_config(argv, at, &path)?;
            Cli::try_parse_from(&merged).map_err(CliError::Clap)
        }
        _ => Cli::try_parse_from(argv).map_err(CliError::Clap),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("TENSORREG_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::usage(format!("TENSORREG_SEED='{}' is not an integer", v))),
        Err(_) => Ok(0),
    }
}

fn run(argv: &[String]) -> Result<(), CliError> {
    let mut cli = parse_cli(argv)?;
    cli.global.seed = Some(resolve_seed(cli.global.seed)?);
    if cli.global.jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let echo = serde_json::to_value(&cli).expect("arguments serialise");
    let ctx = io::Context::new(cli.command.name(), &cli.global, echo)?;
    match &cli.command {
        Command::Fit(a) => commands::fit(&ctx, a),
        Command::Select(a) => commands::select(&ctx, a),
        Command::SimulateRecovery(a) => commands::simulate_recovery(&ctx, a),
        Command::SimulateCollinearity(a) => commands::simulate_collinearity(&ctx, a),
        Command::TarForecast(a) => commands::tar_forecast(&ctx, a),
        Command::Compare(a) => commands::compare(&ctx, a),
        Command::ResidualCov(a) => commands::residual_cov(&ctx, a),
        Command::Dm(a) => commands::dm(&ctx, a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
