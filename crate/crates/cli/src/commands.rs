use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use serde_json::json;
use tensorreg::forecast::{compare_models, dm_test, fit_tar, forecast_recursive, simulate_rank_one_tar, CompareOptions, Favored};
use tensorreg::ingest::{export_csv, parse_f64_list, parse_usize_list, FillPolicy, Panel};
use tensorreg::regression::{fit as fit_regression, Init};
use tensorreg::report::{fit_from_json, fit_to_json};
use tensorreg::residual::{
    correlation_pca, flip_flop, residuals_from_fit, write_biplot_csv, write_correlation_csv, FlipFlopOptions,
    SampleModePolicy,
};
use tensorreg::selection::{grid_search, DataPointCount, GridOptions, Scoring};
use tensorreg::simulation::{
    run_collinearity_seeds, run_recovery_experiment, selection_frequency, smooth_pattern, symmetric_rank_grid,
    write_frequency_csv, write_table1_csv, RecoveryConfig,
};
use tensorreg::{Error, RegressionSpec, TuckerRank};

use crate::io::{load_panel, read_errors, CliError, CliResult, Context};

/// Options shared by every command that fits a regression.
#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Relative objective change that ends the sweeps.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// seeded-random or hosvd.
    #[arg(long, default_value = "seeded-random")]
    pub init: String,
    /// Fit without intercept centring.
    #[arg(long)]
    pub no_center: bool,
    /// Also penalise the core tensor in its update.
    #[arg(long)]
    pub regularize_core: bool,
}

impl SolverArgs {
    fn spec(&self, rank: TuckerRank, lambda: f64, seed: u64) -> CliResult<RegressionSpec> {
        let mut spec = RegressionSpec::new(rank)
            .with_lambda(lambda)
            .with_max_iters(self.max_iters)
            .with_tol(self.tol)
            .with_center(!self.no_center)
            .with_init(self.init.parse::<Init>()?)
            .with_seed(seed);
        spec.regularize_core = self.regularize_core;
        spec.validate()?;
        Ok(spec)
    }
}

/// How CSV inputs become tensors.
#[derive(Args, Debug, Clone, Serialize)]
pub struct IngestArgs {
    /// error, zero or mean for absent label combinations.
    #[arg(long, default_value = "error")]
    pub fill: String,
    /// Sort labels instead of keeping first-seen order.
    #[arg(long)]
    pub lexicographic: bool,
}

impl IngestArgs {
    fn load(&self, path: &PathBuf) -> CliResult<Panel> {
        load_panel(path, self.fill.parse::<FillPolicy>()?, self.lexicographic)
    }
}

/// Ranks separated by spaces or '|', each `F1,..;P1,..`.
fn parse_ranks(s: &str) -> CliResult<Vec<TuckerRank>> {
    let ranks: Vec<TuckerRank> = s
        .split(|c: char| c.is_whitespace() || c == '|')
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<tensorreg::Result<_>>()?;
    if ranks.is_empty() {
        return Err(CliError::usage("empty rank grid"));
    }
    Ok(ranks)
}

fn nonempty<T>(v: Vec<T>, what: &str) -> CliResult<Vec<T>> {
    if v.is_empty() {
        return Err(CliError::usage(format!("{} must not be empty", what)));
    }
    Ok(v)
}

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Core sizes, e.g. "2,2;1" for two input modes and one output mode.
    #[arg(long)]
    pub rank: String,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub ingest: IngestArgs,
}

pub fn fit(ctx: &Context, a: &FitArgs) -> CliResult<()> {
    let x = a.ingest.load(&a.x)?;
    let y = a.ingest.load(&a.y)?;
    let spec = a.solver.spec(a.rank.parse()?, a.lambda, ctx.seed)?;
    let f = fit_regression(&x.tensor, &y.tensor, &spec)?;
    let report = fit_to_json(&f, None);
    ctx.write_file("fit.json", (serde_json::to_string_pretty(&report).expect("fit serialises") + "\n").as_bytes())?;
    ctx.finish(report)
}

#[derive(Args, Debug, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    /// Candidate ranks, e.g. "1,1;1 2,2;1 2,2;2".
    #[arg(long)]
    pub ranks: String,
    #[arg(long, default_value = "0,0.5,1,5,50")]
    pub lambdas: String,
    /// Score on a holdout pair instead of the training data.
    #[arg(long, requires = "y_val")]
    pub x_val: Option<PathBuf>,
    #[arg(long, requires = "x_val")]
    pub y_val: Option<PathBuf>,
    /// Count every response entry (entries) or only samples in the BIC.
    #[arg(long, default_value = "entries")]
    pub count: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub ingest: IngestArgs,
}

pub fn select(ctx: &Context, a: &SelectArgs) -> CliResult<()> {
    let x = a.ingest.load(&a.x)?.tensor;
    let y = a.ingest.load(&a.y)?.tensor;
    let ranks = parse_ranks(&a.ranks)?;
    let lambdas = nonempty(parse_f64_list(&a.lambdas)?, "lambda grid")?;
    let count = match a.count.as_str() {
        "entries" => DataPointCount::Entries,
        "samples" => DataPointCount::Samples,
        other => return Err(CliError::usage(format!("--count must be entries or samples, got '{}'", other))),
    };
    let opts = GridOptions {
        count,
        jobs: ctx.jobs,
        keep_fits: false,
        ..GridOptions::new(a.solver.spec(ranks[0].clone(), 0.0, ctx.seed)?)
    };
    let holdout = match (&a.x_val, &a.y_val) {
        (Some(xv), Some(yv)) => Some((a.ingest.load(xv)?.tensor, a.ingest.load(yv)?.tensor)),
        _ => None,
    };
    let scoring = match &holdout {
        Some((xv, yv)) => Scoring::Holdout { x: xv, y: yv },
        None => Scoring::Train,
    };
    let report = grid_search(&x, &y, &ranks, &lambdas, scoring, &opts)?;
    ctx.write_csv("selection.csv", |w| report.write_csv(w))?;
    let best = report.best_cell().ok_or_else(|| Error::Numerical("every grid cell failed to fit".into()))?;
    ctx.finish(json!({
        "cells": report.cells.len(),
        "failed_cells": report.cells.iter().filter(|c| c.failed()).count(),
        "scoring": if holdout.is_some() { "holdout" } else { "train" },
        "best_cell": best,
        "tie_break_note": report.tie_break_note,
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct RecoveryArgs {
    /// Coefficient pattern size as rows,cols,channels; rows form the input mode.
    #[arg(long, default_value = "24,20,3")]
    pub pattern: String,
    #[arg(long, default_value_t = 150)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Input ranks tried for the row mode.
    #[arg(long, default_value = "2,4,6,8")]
    pub f_grid: String,
    /// Output ranks tried for the column mode.
    #[arg(long, default_value = "2,4,6,8")]
    pub p_grid: String,
    /// Output ranks tried for the channel mode.
    #[arg(long, default_value = "1,2,3")]
    pub c_grid: String,
    #[command(flatten)]
    pub solver: SolverArgs,
}

pub fn simulate_recovery(ctx: &Context, a: &RecoveryArgs) -> CliResult<()> {
    let dims = parse_usize_list(&a.pattern)?;
    let [rows, cols, channels] = dims[..] else {
        return Err(CliError::usage("--pattern needs rows,cols,channels"));
    };
    let truth = smooth_pattern(rows, cols, channels, ctx.seed)?;
    let mut ranks = Vec::new();
    for f in nonempty(parse_usize_list(&a.f_grid)?, "f grid")? {
        for p in nonempty(parse_usize_list(&a.p_grid)?, "p grid")? {
            for c in nonempty(parse_usize_list(&a.c_grid)?, "c grid")? {
                ranks.push(TuckerRank::new(vec![f], vec![p, c]));
            }
        }
    }
    let mut base = a.solver.spec(ranks[0].clone(), 0.0, ctx.seed)?;
    base.center = false;
    let cfg = RecoveryConfig {
        n_samples: a.samples,
        noise_sd: a.noise_sd,
        input_order: 1,
        ranks,
        grid: GridOptions { jobs: ctx.jobs, ..GridOptions::new(base) },
        seed: ctx.seed,
    };
    let report = run_recovery_experiment(&truth, &cfg)?;
    ctx.write_csv("recovery.csv", |w| report.write_csv(w))?;
    ctx.write_tensor("truth.dtf", &truth)?;
    if let Some(b) = &report.best_coefficient {
        ctx.write_tensor("best_coefficient.dtf", b)?;
    }
    ctx.finish(json!({ "coefficient_shape": truth.shape(), "best": report.best_row() }))
}

#[derive(Args, Debug, Serialize)]
pub struct CollinearityArgs {
    /// Target ||signal||^2 / ||noise||^2.
    #[arg(long, default_value_t = 1.0)]
    pub snr: f64,
    /// Number of replications, using seeds seed, seed+1, ...
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value = "1,2,3,4")]
    pub f_grid: String,
    #[arg(long, default_value = "1,2,3,4,5,6")]
    pub g_grid: String,
    #[arg(long, default_value = "0,0.5,1,5,50")]
    pub lambdas: String,
    #[command(flatten)]
    pub solver: SolverArgs,
}

pub fn simulate_collinearity(ctx: &Context, a: &CollinearityArgs) -> CliResult<()> {
    if a.seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let ranks = symmetric_rank_grid(
        &nonempty(parse_usize_list(&a.f_grid)?, "f grid")?,
        &nonempty(parse_usize_list(&a.g_grid)?, "g grid")?,
    );
    let lambdas = nonempty(parse_f64_list(&a.lambdas)?, "lambda grid")?;
    let mut base = a.solver.spec(ranks[0].clone(), 0.0, ctx.seed)?;
    // the simulated responses carry no intercept
    base.center = false;
    let seeds: Vec<u64> = (ctx.seed..ctx.seed + a.seeds).collect();
    let reports = run_collinearity_seeds(a.snr, &seeds, &ranks, &lambdas, &GridOptions::new(base), ctx.jobs)?;
    ctx.write_csv("frequency.csv", |w| write_frequency_csv(&reports, w))?;
    for r in &reports {
        ctx.write_csv(&format!("table_seed{}.csv", r.seed), |w| write_table1_csv(&[r], &lambdas, w))?;
        ctx.write_csv(&format!("selection_seed{}.csv", r.seed), |w| r.selection.write_csv(w))?;
    }
    let frequency: Vec<_> = selection_frequency(&reports)
        .into_iter()
        .map(|((rank, lambda), count)| json!({ "rank": rank, "lambda": lambda, "count": count }))
        .collect();
    let per_seed: Vec<_> = reports
        .iter()
        .map(|r| {
            let c = r.selection.best_cell();
            json!({
                "seed": r.seed,
                "kappa": r.kappa,
                "rank": c.map(|c| c.rank.to_string()),
                "lambda": c.map(|c| c.lambda),
                "bic": c.map(|c| c.bic),
            })
        })
        .collect();
    ctx.finish(json!({ "snr": a.snr, "frequency": frequency, "selected": per_seed }))
}

#[derive(Args, Debug, Serialize)]
pub struct TarArgs {
    /// Series with time as the first mode.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub lag: usize,
    /// Rank over lagged data modes (plus a lag mode when lag > 1), then data modes.
    #[arg(long)]
    pub rank: String,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 4)]
    pub horizon: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub ingest: IngestArgs,
}

pub fn tar_forecast(ctx: &Context, a: &TarArgs) -> CliResult<()> {
    let panel = a.ingest.load(&a.data)?;
    let spec = a.solver.spec(a.rank.parse()?, a.lambda, ctx.seed)?;
    let model = fit_tar(&panel.tensor, a.lag, &spec)?;
    let forecast = forecast_recursive(&model, &panel.tensor, a.horizon)?;
    let mut labels = vec![(1..=a.horizon).map(|h| h.to_string()).collect::<Vec<_>>()];
    labels.extend(panel.labels[1..].iter().cloned());
    let mut mode_names = vec!["step".to_string()];
    mode_names.extend(panel.mode_names[1..].iter().cloned());
    let out = Panel { tensor: forecast, labels, mode_names, value_name: panel.value_name.clone() };
    ctx.write_csv("forecast.csv", |w| export_csv(&out, w))?;
    let report = fit_to_json(&model.fit, None);
    ctx.write_file("fit.json", (serde_json::to_string_pretty(&report).expect("fit serialises") + "\n").as_bytes())?;
    ctx.finish(json!({
        "lag": a.lag,
        "horizon": a.horizon,
        "forecast_shape": out.tensor.shape(),
        "ssr": report["ssr"],
        "converged": report["converged"],
        "iterations": report["iterations"],
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct CompareArgs {
    /// Series with time first; omit to use --simulate.
    #[arg(long, conflicts_with = "simulate")]
    pub data: Option<PathBuf>,
    /// Simulate rank-one TAR data as rows,cols,length.
    #[arg(long)]
    pub simulate: Option<String>,
    /// Spectral radius of the simulated dynamics.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    #[arg(long, default_value = "1,1;1,1 1,2;1,2 2,2;2,2")]
    pub ranks: String,
    #[arg(long, default_value = "0,0.5,1,2.5,5")]
    pub lambdas: String,
    #[arg(long, default_value_t = 1)]
    pub lag: usize,
    #[arg(long, default_value_t = 4)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Train, optimisation and test fractions.
    #[arg(long, default_value = "0.7,0.2,0.1")]
    pub split: String,
    /// Data mode (1-based) whose slices are separate VAR(1) blocks.
    #[arg(long, default_value_t = 2)]
    pub block_mode: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub ingest: IngestArgs,
}

pub fn compare(ctx: &Context, a: &CompareArgs) -> CliResult<()> {
    let y = match (&a.data, &a.simulate) {
        (Some(path), None) => a.ingest.load(path)?.tensor,
        (None, Some(dims)) => {
            let d = parse_usize_list(dims)?;
            let [rows, cols, t] = d[..] else {
                return Err(CliError::usage("--simulate needs rows,cols,length"));
            };
            let y = simulate_rank_one_tar(rows, cols, t, a.radius, ctx.seed)?;
            ctx.write_tensor("series.dtf", &y)?;
            y
        }
        _ => return Err(CliError::usage("give exactly one of --data or --simulate")),
    };
    let split = parse_f64_list(&a.split)?;
    let [tr, op, te] = split[..] else {
        return Err(CliError::usage("--split needs three fractions"));
    };
    let ranks = parse_ranks(&a.ranks)?;
    let lambdas = nonempty(parse_f64_list(&a.lambdas)?, "lambda grid")?;
    let base = a.solver.spec(ranks[0].clone(), 0.0, ctx.seed)?;
    let mut opts = CompareOptions::new(ranks, lambdas, base);
    opts.split = (tr, op, te);
    opts.lag = a.lag;
    opts.horizon = a.horizon;
    opts.alpha = a.alpha;
    opts.block_mode = a.block_mode;
    opts.grid.jobs = ctx.jobs;
    opts.grid.keep_fits = false;
    let report = compare_models(&y, &opts)?;
    ctx.write_csv("dm.csv", |w| report.write_csv(w))?;
    ctx.write_csv("selection.csv", |w| report.selection.write_csv(w))?;
    let mut summary = report.to_json();
    if let Some(obj) = summary.as_object_mut() {
        // the grid is already in selection.csv
        obj.remove("selection");
        obj.insert("best_cell".into(), json!(report.selection.best_cell()));
    }
    ctx.finish(summary)
}

#[derive(Args, Debug, Serialize)]
pub struct ResidualArgs {
    /// Residual tensor, sample mode first.
    #[arg(long, conflicts_with_all = ["x", "y", "fit"])]
    pub residuals: Option<PathBuf>,
    /// Compute residuals from a saved fit and its data instead.
    #[arg(long, requires_all = ["y", "fit"])]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// fit.json written by `fit`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// estimate or independent.
    #[arg(long, default_value = "independent")]
    pub sample_mode: String,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[command(flatten)]
    pub ingest: IngestArgs,
}

pub fn residual_cov(ctx: &Context, a: &ResidualArgs) -> CliResult<()> {
    let (residuals, labels, names) = match (&a.residuals, &a.x, &a.y, &a.fit) {
        (Some(path), None, None, None) => {
            let p = a.ingest.load(path)?;
            (p.tensor, p.labels, p.mode_names)
        }
        (None, Some(x), Some(y), Some(fit_path)) => {
            let text = std::fs::read_to_string(fit_path)
                .map_err(|e| Error::Ingest(format!("cannot read {}: {}", fit_path.display(), e)))?;
            let value: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {}", fit_path.display(), e)))?;
            let f = fit_from_json(&value)?;
            let y = a.ingest.load(y)?;
            let r = residuals_from_fit(&f, &a.ingest.load(x)?.tensor, &y.tensor)?;
            (r, y.labels, y.mode_names)
        }
        _ => return Err(CliError::usage("give --residuals, or all of --x, --y and --fit")),
    };
    let sample_mode = match a.sample_mode.as_str() {
        "estimate" => SampleModePolicy::Estimate,
        "independent" => SampleModePolicy::Independent,
        other => return Err(CliError::usage(format!("--sample-mode must be estimate or independent, got '{}'", other))),
    };
    let set = flip_flop(&residuals, &FlipFlopOptions { max_iters: a.max_iters, tol: a.tol, sample_mode })?;
    let mut modes = Vec::new();
    for c in &set.correlations {
        let l = labels.get(c.mode).map(|v| v.as_slice());
        let name = names.get(c.mode).cloned().unwrap_or_else(|| format!("mode{}", c.mode));
        ctx.write_csv(&format!("correlation_{}.csv", name), |w| write_correlation_csv(&c.matrix, l, w))?;
        let pca = correlation_pca(&c.matrix)?;
        ctx.write_csv(&format!("biplot_{}.csv", name), |w| write_biplot_csv(&pca, l, w))?;
        modes.push(json!({
            "mode": c.mode,
            "name": name,
            "size": c.matrix.nrows(),
            "eigenvalues": pca.eigenvalues,
            "explained": pca.explained,
        }));
    }
    ctx.finish(json!({
        "shape": residuals.shape(),
        "iterations": set.iterations,
        "converged": set.converged,
        "modes": modes,
    }))
}

#[derive(Args, Debug, Serialize)]
pub struct DmArgs {
    /// Forecast errors of model 1, one per line.
    #[arg(long)]
    pub fe1: PathBuf,
    #[arg(long)]
    pub fe2: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub h: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

pub fn dm(ctx: &Context, a: &DmArgs) -> CliResult<()> {
    let r = dm_test(&read_errors(&a.fe1)?, &read_errors(&a.fe2)?, a.h)?;
    let favored = match r.favored_at(a.alpha) {
        Favored::Model1 => "model1",
        Favored::Model2 => "model2",
        Favored::None => "none",
    };
    ctx.finish(json!({
        "statistic": r.statistic,
        "p_value": r.p_value,
        "n": r.n,
        "h": r.horizon,
        "loss": r.loss,
        "degenerate": r.degenerate,
        "alpha": a.alpha,
        "favored": favored,
    }))
}
