//! BIC-scored grid search over Tucker ranks and ridge penalties.

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::regression::{fit, predict, RegressionFit, RegressionSpec, TuckerRank};
use crate::tensor::DenseTensor;

/// `BIC = u ln(SSR/u) + w ln(u)`.
///
/// A perfect fit (`ssr == 0`) returns negative infinity.
pub fn bic(ssr: f64, u: usize, w: usize) -> Result<f64> {
    if u <= 1 {
        return Err(Error::InvalidArgument(format!("BIC needs more than one data point, got u = {}", u)));
    }
    if !(ssr >= 0.0) || !ssr.is_finite() {
        return Err(Error::InvalidArgument(format!("SSR must be finite and non-negative, got {}", ssr)));
    }
    if ssr == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let u = u as f64;
    Ok(u * (ssr / u).ln() + w as f64 * u.ln())
}

/// What counts as a data point `u` in the BIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataPointCount {
    /// Every scalar response entry used in the score.
    #[default]
    Entries,
    /// Only the sample count.
    Samples,
}

#[derive(Debug, Clone, Copy)]
pub enum Scoring<'a> {
    Train,
    Holdout { x: &'a DenseTensor, y: &'a DenseTensor },
}

#[derive(Debug, Clone)]
pub struct GridOptions {
    /// Template for every cell; rank and lambda are overridden per cell.
    pub base: RegressionSpec,
    pub count: DataPointCount,
    /// Worker threads; results do not depend on this.
    pub jobs: usize,
    pub keep_fits: bool,
}

impl GridOptions {
    pub fn new(base: RegressionSpec) -> Self {
        GridOptions { base, count: DataPointCount::Entries, jobs: 1, keep_fits: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionCell {
    pub rank: TuckerRank,
    pub lambda: f64,
    pub bic: f64,
    pub ssr: f64,
    pub u: usize,
    pub w: usize,
    pub converged: bool,
    pub iterations: usize,
    pub perfect_fit: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub fit: Option<RegressionFit>,
}

impl SelectionCell {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub cells: Vec<SelectionCell>,
    pub best: Option<usize>,
    pub tie_break_note: String,
}

impl SelectionReport {
    pub fn best_cell(&self) -> Option<&SelectionCell> {
        self.best.map(|i| &self.cells[i])
    }

    /// Minimum-BIC cell among those with the given lambda.
    pub fn best_for_lambda(&self, lambda: f64) -> Option<&SelectionCell> {
        self.cells
            .iter()
            .filter(|c| !c.failed() && c.lambda == lambda)
            .min_by(|a, b| cell_order(a, b))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let width = self.cells.iter().map(|c| c.rank.flat().len()).max().unwrap_or(0);
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=width).map(|k| format!("rank_{}", k)).collect();
        header.extend(["lambda", "ssr", "u", "w", "bic", "converged", "best"].map(String::from));
        out.write_record(&header).map_err(csv_err)?;
        for (i, c) in self.cells.iter().enumerate() {
            let mut row: Vec<String> = c.rank.flat().iter().map(|r| r.to_string()).collect();
            row.resize(width, String::new());
            row.push(fmt_f64(c.lambda));
            row.push(fmt_f64(c.ssr));
            row.push(c.u.to_string());
            row.push(c.w.to_string());
            row.push(fmt_f64(c.bic));
            row.push(if c.failed() { "failed".into() } else { c.converged.to_string() });
            row.push((self.best == Some(i)).to_string());
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "cells": self.cells,
            "best": self.best,
            "best_cell": self.best_cell(),
            "tie_break_note": self.tie_break_note,
        })
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

/// Lower BIC first; ties prefer fewer parameters, then smaller lambda, then
/// the lexicographically smaller rank tuple.
fn cell_order(a: &SelectionCell, b: &SelectionCell) -> Ordering {
    a.bic
        .total_cmp(&b.bic)
        .then(a.w.cmp(&b.w))
        .then(a.lambda.total_cmp(&b.lambda))
        .then_with(|| a.rank.flat().cmp(&b.rank.flat()))
}

pub const TIE_BREAK_NOTE: &str = "minimum BIC; ties broken by fewest parameters, then smallest lambda, then smallest rank tuple";

/// Residuals this small relative to the target are round-off: the BIC's log
/// term would rank such fits by noise, so they score as perfect fits.
pub const PERFECT_FIT_RTOL: f64 = 1e-20;

fn evaluate_cell(
    x: &DenseTensor,
    y: &DenseTensor,
    rank: &TuckerRank,
    lambda: f64,
    scoring: Scoring<'_>,
    opts: &GridOptions,
) -> SelectionCell {
    let mut spec = opts.base.clone();
    spec.rank = rank.clone();
    spec.lambda = lambda;
    let outcome = fit(x, y, &spec).and_then(|f| {
        let (ssr, target) = match scoring {
            Scoring::Train => (f.ssr, y),
            Scoring::Holdout { x: xv, y: yv } => {
                let yhat = predict(&f, xv)?;
                (yv.sub(&yhat)?.squared_norm(), yv)
            }
        };
        let u = match opts.count {
            DataPointCount::Entries => target.len(),
            DataPointCount::Samples => target.shape()[0],
        };
        let w = f.coefficient.parameter_count();
        let perfect = ssr <= PERFECT_FIT_RTOL * target.squared_norm();
        let score = if perfect { f64::NEG_INFINITY } else { bic(ssr, u, w)? };
        Ok((f, ssr, u, w, score, perfect))
    });
    match outcome {
        Ok((f, ssr, u, w, score, perfect)) => SelectionCell {
            rank: rank.clone(),
            lambda,
            bic: score,
            ssr,
            u,
            w,
            converged: f.converged,
            iterations: f.iterations,
            perfect_fit: perfect,
            error: None,
            fit: opts.keep_fits.then_some(f),
        },
        Err(e) => SelectionCell {
            rank: rank.clone(),
            lambda,
            bic: f64::NAN,
            ssr: f64::NAN,
            u: 0,
            w: 0,
            converged: false,
            iterations: 0,
            perfect_fit: false,
            error: Some(e.to_string()),
            fit: None,
        },
    }
}

/// Fits every `(rank, lambda)` pair and scores it by BIC. Cells whose fit fails
/// are kept in the report, marked failed and never selected.
pub fn grid_search(
    x: &DenseTensor,
    y: &DenseTensor,
    ranks: &[TuckerRank],
    lambdas: &[f64],
    scoring: Scoring<'_>,
    opts: &GridOptions,
) -> Result<SelectionReport> {
    if ranks.is_empty() || lambdas.is_empty() {
        return Err(Error::InvalidArgument("rank and lambda grids must be non-empty".into()));
    }
    if let Scoring::Holdout { x: xv, y: yv } = scoring {
        if xv.shape()[1..] != x.shape()[1..] || yv.shape()[1..] != y.shape()[1..] || xv.shape()[0] != yv.shape()[0] {
            return Err(Error::DimensionMismatch(format!(
                "holdout shapes {:?} -> {:?} do not match training {:?} -> {:?}",
                xv.shape(),
                yv.shape(),
                x.shape(),
                y.shape()
            )));
        }
    }
    let grid: Vec<(&TuckerRank, f64)> =
        ranks.iter().flat_map(|r| lambdas.iter().map(move |&l| (r, l))).collect();
    let cells = run_cells(&grid, opts.jobs, |(rank, lambda)| evaluate_cell(x, y, rank, *lambda, scoring, opts));
    let best = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.failed())
        .min_by(|(_, a), (_, b)| cell_order(a, b))
        .map(|(i, _)| i);
    Ok(SelectionReport { cells, best, tie_break_note: TIE_BREAK_NOTE.to_string() })
}

/// Evaluates `f` on every item, on up to `jobs` threads, keeping input order.
pub fn run_cells<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                scope.spawn(move || part.iter().map(f).collect::<Vec<R>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("grid worker panicked")).collect()
    })
}
