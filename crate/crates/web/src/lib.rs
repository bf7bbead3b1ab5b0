//! WebAssembly entry points for the demo page. Each export takes plain numbers
//! and returns a JSON string the page renders; the same functions are plain
//! Rust underneath so they can be tested natively.

use serde_json::json;
use tensorreg::forecast::{compare_models, simulate_rank_one_tar, CompareOptions};
use tensorreg::residual::{flip_flop, FlipFlopOptions, SampleModePolicy};
use tensorreg::selection::GridOptions;
use tensorreg::simulation::{
    ar1_correlation, generate_array_normal, run_recovery_experiment, smooth_pattern, symmetric_rank_grid,
    ArrayNormalSpec, RecoveryConfig,
};
use tensorreg::{DenseTensor, Matrix, RegressionSpec, TuckerRank};
use wasm_bindgen::prelude::*;

const PATTERN: (usize, usize, usize) = (20, 16, 2);

fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// First channel of a rows x cols x channels coefficient, row by row.
fn channel(t: &DenseTensor, c: usize) -> Vec<Vec<f64>> {
    let s = t.shape();
    (0..s[0]).map(|i| (0..s[1]).map(|j| t.get(&[i, j, c])).collect()).collect()
}

/// Fits a rank-`rank` Tucker regression to noisy data generated from a smooth
/// coefficient and returns the truth, the estimate and the error summary.
pub fn recovery(rank: usize, samples: usize, noise_sd: f64, seed: u64) -> Result<String, String> {
    let (rows, cols, channels) = PATTERN;
    let truth = smooth_pattern(rows, cols, channels, seed).map_err(|e| e.to_string())?;
    let r = TuckerRank::new(vec![rank], vec![rank, channels]);
    let base = RegressionSpec::new(r.clone()).with_center(false).with_max_iters(200).with_seed(seed);
    let cfg = RecoveryConfig {
        n_samples: samples,
        noise_sd,
        input_order: 1,
        ranks: vec![r],
        grid: GridOptions::new(base),
        seed,
    };
    let report = run_recovery_experiment(&truth, &cfg).map_err(|e| e.to_string())?;
    let row = report.best_row().ok_or("the fit failed")?;
    let estimate = report.best_coefficient.as_ref().ok_or("the fit failed")?;
    Ok(json!({
        "rank": rank,
        "parameters": row.w,
        "full_parameters": truth.len(),
        "compression": row.compression,
        "relative_error": row.relative_error,
        "bic": row.bic,
        "truth": channel(&truth, 0),
        "estimate": channel(estimate, 0),
    })
    .to_string())
}

/// Simulates `samples` array-normal matrices with AR(1) row and column
/// correlations and estimates both by flip-flop.
pub fn separable(rho_rows: f64, rho_cols: f64, samples: usize, seed: u64) -> Result<String, String> {
    let spec = ArrayNormalSpec { shape: vec![samples, 6, 5], rhos: vec![0.0, rho_rows, rho_cols], seed };
    let e = generate_array_normal(&spec).map_err(|e| e.to_string())?;
    let opts = FlipFlopOptions { sample_mode: SampleModePolicy::Independent, ..FlipFlopOptions::default() };
    let set = flip_flop(&e, &opts).map_err(|e| e.to_string())?;
    let mode = |m: usize, rho: f64| -> Result<serde_json::Value, String> {
        let est = set.for_mode(m).ok_or("mode missing from estimate")?;
        let truth = ar1_correlation(spec.shape[m], rho);
        Ok(json!({
            "estimate": rows_of(est),
            "truth": rows_of(&truth),
            "max_error": (est - &truth).abs().max(),
        }))
    };
    Ok(json!({
        "rows": mode(1, rho_rows)?,
        "cols": mode(2, rho_cols)?,
        "iterations": set.iterations,
        "converged": set.converged,
    })
    .to_string())
}

/// TAR against per-column VAR(1) on simulated rank-one TAR data.
pub fn forecast(radius: f64, length: usize, seed: u64) -> Result<String, String> {
    let y = simulate_rank_one_tar(4, 6, length, radius, seed).map_err(|e| e.to_string())?;
    let ranks = symmetric_rank_grid(&[1, 2], &[1, 2]);
    let base = RegressionSpec::new(ranks[0].clone()).with_max_iters(200).with_seed(seed);
    let mut opts = CompareOptions::new(ranks, vec![0.0, 1.0, 5.0], base);
    opts.grid.keep_fits = false;
    let report = compare_models(&y, &opts).map_err(|e| e.to_string())?;
    let (train, optn, test) = report.split;
    let series: Vec<f64> = (0..y.shape()[0]).map(|t| y.get(&[t, 0, 0])).collect();
    let overall = |r: &tensorreg::forecast::ForecastReport| (1..=r.horizons).map(|h| r.overall_rmsfe(h)).collect::<Vec<_>>();
    Ok(json!({
        "series": series,
        "split": [train, optn, test],
        "selected_rank": report.selected_rank.to_string(),
        "selected_lambda": report.selected_lambda,
        "tar_rmsfe": overall(&report.tar),
        "var_rmsfe": overall(&report.var),
        "rejections": report.rejections,
        "favor_tar": report.favor_tar,
        "favor_var": report.favor_var,
        "cells": report.cells.len(),
    })
    .to_string())
}

#[wasm_bindgen(js_name = recovery)]
pub fn recovery_js(rank: usize, samples: usize, noise_sd: f64, seed: u32) -> Result<String, JsValue> {
    recovery(rank, samples, noise_sd, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = separable)]
pub fn separable_js(rho_rows: f64, rho_cols: f64, samples: usize, seed: u32) -> Result<String, JsValue> {
    separable(rho_rows, rho_cols, samples, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = forecast)]
pub fn forecast_js(radius: f64, length: usize, seed: u32) -> Result<String, JsValue> {
    forecast(radius, length, seed as u64).map_err(|e| JsValue::from_str(&e))
}
