//! Tensor autoregression, recursive multi-step forecasts, a per-block VAR(1)
//! baseline and the small-sample corrected Diebold-Mariano comparison.

use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::{solve_psd, SolveMethod};
use crate::regression::{fit, RegressionFit, RegressionSpec, TuckerRank};
use crate::selection::{csv_err, grid_search, run_cells, GridOptions, Scoring, SelectionReport};
use crate::simulation::{rng_for, standard_normal_matrix, standard_normal_tensor};
use crate::tensor::{DenseTensor, Matrix};

/// Significance level used for the `favored` marker.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Regressor/response pairs for a lag-`p` autoregression.
///
/// For `p = 1` the regressor is `Y_{t-1}`. For `p > 1` the lags are stacked
/// along a trailing mode of size `p`, most recent lag first.
pub fn tar_design(y: &DenseTensor, p: usize) -> Result<(DenseTensor, DenseTensor)> {
    let t = check_series(y, p)?;
    let target = y.select_samples(p..t)?;
    if p == 1 {
        return Ok((y.select_samples(0..t - 1)?, target));
    }
    let windows = (p..t)
        .map(|s| lag_window(y, s, p))
        .collect::<Result<Vec<_>>>()?;
    Ok((DenseTensor::stack(&windows)?, target))
}

fn check_series(y: &DenseTensor, p: usize) -> Result<usize> {
    if p == 0 {
        return Err(Error::InvalidArgument("lag must be positive".into()));
    }
    if y.order() < 2 {
        return Err(Error::InvalidShape(format!("series needs a time mode and data modes, got {:?}", y.shape())));
    }
    let t = y.shape()[0];
    if t <= p + 1 {
        return Err(Error::InvalidData(format!("{} time points are not enough for lag {}", t, p)));
    }
    Ok(t)
}

/// Regressor for the sample at time `s`: `Y_{s-1}` or `[Y_{s-1}, .., Y_{s-p}]`.
fn lag_window(y: &DenseTensor, s: usize, p: usize) -> Result<DenseTensor> {
    let recent: Vec<DenseTensor> = (1..=p).map(|l| y.observation(s - l)).collect::<Result<_>>()?;
    window_from(&recent)
}

/// `recent[0]` is the newest observation.
fn window_from(recent: &[DenseTensor]) -> Result<DenseTensor> {
    if recent.len() == 1 {
        return Ok(recent[0].clone());
    }
    let mut shape = recent[0].shape().to_vec();
    shape.push(recent.len());
    let data = recent.iter().flat_map(|r| r.data().iter().copied()).collect();
    DenseTensor::new(shape, data)
}

fn with_sample_mode(t: DenseTensor) -> Result<DenseTensor> {
    let mut shape = vec![1];
    shape.extend_from_slice(t.shape());
    t.reshape(shape)
}

/// One-step-ahead predictor that can be iterated.
pub trait Forecaster {
    fn lag(&self) -> usize;
    /// Next observation from the latest `lag()` observations, newest first.
    fn step(&self, recent: &[DenseTensor]) -> Result<DenseTensor>;
}

pub struct TarModel {
    pub lag: usize,
    pub fit: RegressionFit,
    pub labels: Option<Vec<Vec<String>>>,
}

impl Forecaster for TarModel {
    fn lag(&self) -> usize {
        self.lag
    }

    fn step(&self, recent: &[DenseTensor]) -> Result<DenseTensor> {
        let x = with_sample_mode(window_from(recent)?)?;
        self.fit.predict(&x)?.observation(0)
    }
}

/// Fits a lag-`p` tensor autoregression on `y` (time first).
pub fn fit_tar(y: &DenseTensor, p: usize, spec: &RegressionSpec) -> Result<TarModel> {
    let (x, target) = tar_design(y, p)?;
    let fit = fit(&x, &target, spec)?;
    Ok(TarModel { lag: p, fit, labels: None })
}

/// Forecasts `h` steps past the end of `history`, feeding predictions back in.
pub fn forecast_recursive(model: &dyn Forecaster, history: &DenseTensor, h: usize) -> Result<DenseTensor> {
    if h == 0 {
        return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
    }
    let p = model.lag();
    let t = history.shape()[0];
    if history.order() < 2 || t < p {
        return Err(Error::InvalidData(format!("history of {} points is shorter than lag {}", t, p)));
    }
    let mut recent: Vec<DenseTensor> = (1..=p).map(|l| history.observation(t - l)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(h);
    for _ in 0..h {
        let next = model.step(&recent)?;
        if next.shape() != &history.shape()[1..] {
            return Err(Error::DimensionMismatch(format!(
                "model produces {:?} but the series has {:?}",
                next.shape(),
                &history.shape()[1..]
            )));
        }
        recent.pop();
        recent.insert(0, next.clone());
        out.push(next);
    }
    DenseTensor::stack(&out)
}

/// `sqrt(sum_{h=1}^{H} FE_h^2 / H)` over the first `h` entries of `fe`.
pub fn rmsfe(fe: &[f64], h: usize) -> Result<f64> {
    if h == 0 || h > fe.len() {
        return Err(Error::InvalidArgument(format!("horizon {} with {} forecast errors", h, fe.len())));
    }
    Ok((fe[..h].iter().map(|e| e * e).sum::<f64>() / h as f64).sqrt())
}

/// `y_t = c + A y_{t-1} + e_t`, one OLS regression per equation.
#[derive(Debug, Clone, Serialize)]
pub struct Var1 {
    #[serde(serialize_with = "ser_matrix")]
    pub coefficient: Matrix,
    pub intercept: Vec<f64>,
    pub warnings: Vec<String>,
}

fn ser_matrix<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        seq.serialize_element(&m.row(r).iter().copied().collect::<Vec<f64>>())?;
    }
    seq.end()
}

/// OLS VAR(1) on a `T x K` matrix; a singular design falls back to the
/// pseudo-inverse and records a warning.
pub fn fit_var1(y: &Matrix) -> Result<Var1> {
    let (t, k) = y.shape();
    if t <= k + 1 {
        return Err(Error::InvalidData(format!("{} time points are not enough for a {}-variable VAR(1)", t, k)));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite entries in VAR series".into()));
    }
    let n = t - 1;
    let mut z = Matrix::from_element(n, k + 1, 1.0);
    z.view_mut((0, 1), (n, k)).copy_from(&y.rows(0, n));
    let target = y.rows(1, n).into_owned();
    let (sol, method) = solve_psd(&(z.transpose() * &z), &(z.transpose() * &target));
    let mut warnings = Vec::new();
    if method == SolveMethod::PseudoInverse {
        warnings.push("singular VAR design, used pseudo-inverse".to_string());
    }
    Ok(Var1 {
        coefficient: sol.rows(1, k).transpose(),
        intercept: sol.row(0).iter().copied().collect(),
        warnings,
    })
}

impl Var1 {
    pub fn step_vec(&self, prev: &DVector<f64>) -> DVector<f64> {
        &self.coefficient * prev + DVector::from_column_slice(&self.intercept)
    }
}

impl Forecaster for Var1 {
    fn lag(&self) -> usize {
        1
    }

    fn step(&self, recent: &[DenseTensor]) -> Result<DenseTensor> {
        let prev = DVector::from_column_slice(recent[0].data());
        if prev.len() != self.intercept.len() {
            return Err(Error::DimensionMismatch(format!(
                "VAR has {} variables, observation has {}",
                self.intercept.len(),
                prev.len()
            )));
        }
        DenseTensor::new(recent[0].shape().to_vec(), self.step_vec(&prev).as_slice().to_vec())
    }
}

/// Independent VAR(1) per slice of `block_mode` (e.g. one per country),
/// using every other data mode as that block's variables.
#[derive(Debug, Clone, Serialize)]
pub struct BlockVar1 {
    pub block_mode: usize,
    pub shape: Vec<usize>,
    pub blocks: Vec<Var1>,
}

/// Order of entries of one observation when the block mode is moved last.
fn block_permutation(order: usize, block_mode: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..order).filter(|&m| m != block_mode).collect();
    perm.push(block_mode);
    perm
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// `block_mode` indexes the series tensor: 1 is the first data mode.
pub fn fit_block_var1(y: &DenseTensor, block_mode: usize, jobs: usize) -> Result<BlockVar1> {
    if y.order() < 3 || block_mode == 0 || block_mode >= y.order() {
        return Err(Error::InvalidArgument(format!(
            "block mode {} is not a data mode of a series shaped {:?}",
            block_mode,
            y.shape()
        )));
    }
    let perm = block_permutation(y.order(), block_mode);
    let moved = y.permute(&perm)?;
    let t = y.shape()[0];
    let nb = y.shape()[block_mode];
    let k = moved.len() / (t * nb);
    let slices: Vec<Matrix> = (0..nb)
        .map(|b| Matrix::from_column_slice(t, k, &moved.data()[b * t * k..(b + 1) * t * k]))
        .collect();
    let blocks = run_cells(&slices, jobs, fit_var1).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BlockVar1 { block_mode, shape: y.shape()[1..].to_vec(), blocks })
}

impl Forecaster for BlockVar1 {
    fn lag(&self) -> usize {
        1
    }

    fn step(&self, recent: &[DenseTensor]) -> Result<DenseTensor> {
        let obs = &recent[0];
        if obs.shape() != self.shape.as_slice() {
            return Err(Error::DimensionMismatch(format!("expected {:?}, got {:?}", self.shape, obs.shape())));
        }
        let local = self.block_mode - 1;
        let perm = block_permutation(obs.order(), local);
        let moved = obs.permute(&perm)?;
        let k = moved.len() / self.blocks.len();
        let mut next = Vec::with_capacity(moved.len());
        for (b, model) in self.blocks.iter().enumerate() {
            let prev = DVector::from_column_slice(&moved.data()[b * k..(b + 1) * k]);
            next.extend_from_slice(model.step_vec(&prev).as_slice());
        }
        DenseTensor::new(moved.shape().to_vec(), next)?.permute(&inverse(&perm))
    }
}

/// Which model a significant DM statistic points to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Favored {
    Model1,
    Model2,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct DmResult {
    pub statistic: f64,
    pub p_value: f64,
    pub horizon: usize,
    pub n: usize,
    pub loss: &'static str,
    pub favored: Favored,
    /// The loss differential had no usable variance.
    pub degenerate: bool,
}

impl DmResult {
    /// Positive statistics mean model 1 has the larger loss.
    pub fn favored_at(&self, alpha: f64) -> Favored {
        if self.p_value < alpha && self.statistic != 0.0 {
            if self.statistic > 0.0 { Favored::Model2 } else { Favored::Model1 }
        } else {
            Favored::None
        }
    }
}

/// Diebold-Mariano test of equal squared-error loss with the Harvey
/// small-sample correction and a Student-t(n-1) reference.
pub fn dm_test(fe1: &[f64], fe2: &[f64], h: usize) -> Result<DmResult> {
    if fe1.len() != fe2.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} forecast errors", fe1.len(), fe2.len())));
    }
    let n = fe1.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!("DM test needs at least 8 error pairs, got {}", n)));
    }
    if h == 0 || h >= n {
        return Err(Error::InvalidArgument(format!("horizon {} invalid for {} pairs", h, n)));
    }
    if fe1.iter().chain(fe2).any(|v| !v.is_finite()) {
        return Err(Error::InvalidData("non-finite forecast errors".into()));
    }
    let d: Vec<f64> = fe1.iter().zip(fe2).map(|(a, b)| a * a - b * b).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let gamma = |k: usize| (k..n).map(|t| (d[t] - mean) * (d[t - k] - mean)).sum::<f64>() / nf;
    let mut lrv = (gamma(0) + 2.0 * (1..h).map(gamma).sum::<f64>()) / nf;
    if lrv <= 0.0 && h > 1 {
        // the truncated window can go negative in short samples; drop to lag 0
        lrv = gamma(0) / nf;
    }
    let hf = h as f64;
    let correction = (nf + 1.0 - 2.0 * hf + hf * (hf - 1.0) / nf) / nf;
    if correction <= 0.0 {
        return Err(Error::InvalidArgument(format!("horizon {} too long for {} pairs", h, n)));
    }
    let (statistic, p_value, degenerate) = if mean == 0.0 {
        (0.0, 1.0, lrv <= 0.0)
    } else if lrv <= 0.0 {
        (mean.signum() * f64::INFINITY, 0.0, true)
    } else {
        let s = mean / lrv.sqrt() * correction.sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
        (s, (2.0 * (1.0 - t.cdf(s.abs()))).clamp(0.0, 1.0), false)
    };
    let mut out = DmResult { statistic, p_value, horizon: h, n, loss: "squared", favored: Favored::None, degenerate };
    out.favored = out.favored_at(DEFAULT_ALPHA);
    Ok(out)
}

/// `(train, optimize, test)` lengths: floor for the first two, remainder last.
pub fn split_lengths(t: usize, fractions: (f64, f64, f64)) -> Result<(usize, usize, usize)> {
    let (a, b, c) = fractions;
    if [a, b, c].iter().any(|f| !(*f > 0.0)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split fractions {:?} must be positive and sum to 1", fractions)));
    }
    let train = (a * t as f64 + 1e-9).floor() as usize;
    let opt = (b * t as f64 + 1e-9).floor() as usize;
    Ok((train, opt, t - train - opt))
}

/// Rolling-origin forecast errors over the last `test` points of `y`.
///
/// Entry `h-1` is a `(test - h + 1) x S` matrix of errors at horizon `h`.
pub fn rolling_errors(model: &dyn Forecaster, y: &DenseTensor, test: usize, horizon: usize) -> Result<Vec<Matrix>> {
    let t = y.shape()[0];
    let series = y.len() / t;
    if test < horizon || test >= t {
        return Err(Error::InvalidArgument(format!("test length {} with horizon {} on {} points", test, horizon, t)));
    }
    let start = t - test;
    let mut errors: Vec<Matrix> = (1..=horizon).map(|h| Matrix::zeros(test - h + 1, series)).collect();
    for origin in start..t {
        let steps = horizon.min(t - origin);
        let fc = forecast_recursive(model, &y.select_samples(0..origin)?, steps)?;
        for h in 0..steps {
            let actual = y.observation(origin + h)?;
            let pred = fc.observation(h)?;
            for (s, (a, p)) in actual.data().iter().zip(pred.data()).enumerate() {
                errors[h][(origin - start, s)] = a - p;
            }
        }
    }
    Ok(errors)
}

#[derive(Debug, Clone, Serialize)]
pub struct ForecastReport {
    pub model: String,
    pub horizons: usize,
    pub series: usize,
    /// `rmsfe[h-1][s]` over the rolling origins at horizon `h`.
    pub rmsfe: Vec<Vec<f64>>,
    #[serde(skip)]
    pub errors: Vec<Matrix>,
}

impl ForecastReport {
    pub fn from_errors(model: &str, errors: Vec<Matrix>) -> Self {
        let series = errors.first().map(|m| m.ncols()).unwrap_or(0);
        let rmsfe = errors
            .iter()
            .map(|m| (0..m.ncols()).map(|s| (m.column(s).norm_squared() / m.nrows() as f64).sqrt()).collect())
            .collect();
        ForecastReport { model: model.to_string(), horizons: errors.len(), series, rmsfe, errors }
    }

    /// Root mean squared error over all series and origins at horizon `h`.
    pub fn overall_rmsfe(&self, h: usize) -> f64 {
        let m = &self.errors[h - 1];
        (m.norm_squared() / m.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct CompareOptions {
    pub split: (f64, f64, f64),
    pub lag: usize,
    pub ranks: Vec<TuckerRank>,
    pub lambdas: Vec<f64>,
    pub horizon: usize,
    /// Series mode holding the VAR blocks (1 = first data mode).
    pub block_mode: usize,
    pub alpha: f64,
    pub grid: GridOptions,
}

impl CompareOptions {
    pub fn new(ranks: Vec<TuckerRank>, lambdas: Vec<f64>, base: RegressionSpec) -> Self {
        CompareOptions {
            split: (0.7, 0.2, 0.1),
            lag: 1,
            ranks,
            lambdas,
            horizon: 4,
            block_mode: 2,
            alpha: DEFAULT_ALPHA,
            grid: GridOptions::new(base),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DmCell {
    pub series: usize,
    pub index: Vec<usize>,
    pub horizon: usize,
    pub statistic: f64,
    pub p_value: f64,
    /// "tar", "var" or "none".
    pub favored: &'static str,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub split: (usize, usize, usize),
    pub selected_rank: TuckerRank,
    pub selected_lambda: f64,
    pub selection: SelectionReport,
    pub cells: Vec<DmCell>,
    pub tar: ForecastReport,
    pub var: ForecastReport,
    pub rejections: usize,
    pub favor_tar: usize,
    pub favor_var: usize,
}

impl ComparisonReport {
    /// Share of significant cells that favour the TAR.
    pub fn tar_share_of_rejections(&self) -> Option<f64> {
        (self.rejections > 0).then(|| self.favor_tar as f64 / self.rejections as f64)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["series", "index", "horizon", "statistic", "p_value", "favored", "tar_rmsfe", "var_rmsfe"])
            .map_err(csv_err)?;
        for c in &self.cells {
            let idx: Vec<String> = c.index.iter().map(|i| i.to_string()).collect();
            out.write_record([
                c.series.to_string(),
                idx.join(":"),
                c.horizon.to_string(),
                fmt_f64(c.statistic),
                fmt_f64(c.p_value),
                c.favored.to_string(),
                fmt_f64(self.tar.rmsfe[c.horizon - 1][c.series]),
                fmt_f64(self.var.rmsfe[c.horizon - 1][c.series]),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let overall = |r: &ForecastReport| (1..=r.horizons).map(|h| r.overall_rmsfe(h)).collect::<Vec<_>>();
        serde_json::json!({
            "split": self.split,
            "selected_rank": self.selected_rank,
            "selected_lambda": self.selected_lambda,
            "rejections": self.rejections,
            "favor_tar": self.favor_tar,
            "favor_var": self.favor_var,
            "tar_share_of_rejections": self.tar_share_of_rejections(),
            "tar_rmsfe_by_horizon": overall(&self.tar),
            "var_rmsfe_by_horizon": overall(&self.var),
            "selection": self.selection.to_json(),
        })
    }
}

/// TAR against per-block VAR(1): hyperparameters chosen by one-step BIC on
/// the optimisation segment, both models refitted on train + optimisation,
/// then rolling forecasts over the test segment compared cell by cell.
pub fn compare_models(y: &DenseTensor, opts: &CompareOptions) -> Result<ComparisonReport> {
    let t = check_series(y, opts.lag)?;
    let (train, optn, test) = split_lengths(t, opts.split)?;
    if train <= opts.lag + 1 || optn == 0 || test < opts.horizon {
        return Err(Error::InvalidData(format!("segments {}/{}/{} too short", train, optn, test)));
    }
    let (x_tr, y_tr) = tar_design(&y.select_samples(0..train)?, opts.lag)?;
    let (x_all, y_all) = tar_design(&y.select_samples(0..train + optn)?, opts.lag)?;
    let skip = x_tr.shape()[0];
    let rows = x_all.shape()[0];
    let x_opt = x_all.select_samples(skip..rows)?;
    let y_opt = y_all.select_samples(skip..rows)?;
    let mut grid = opts.grid.clone();
    grid.keep_fits = false;
    let selection = grid_search(&x_tr, &y_tr, &opts.ranks, &opts.lambdas, Scoring::Holdout { x: &x_opt, y: &y_opt }, &grid)?;
    let best = selection
        .best_cell()
        .ok_or_else(|| Error::Numerical("every TAR configuration failed to fit".into()))?;
    let mut spec = opts.grid.base.clone();
    spec.rank = best.rank.clone();
    spec.lambda = best.lambda;
    let tar = TarModel { lag: opts.lag, fit: fit(&x_all, &y_all, &spec)?, labels: None };
    let var = fit_block_var1(&y.select_samples(0..train + optn)?, opts.block_mode, opts.grid.jobs)?;

    let tar_err = rolling_errors(&tar, y, test, opts.horizon)?;
    let var_err = rolling_errors(&var, y, test, opts.horizon)?;
    let series = y.len() / t;
    let data_shape = DenseTensor::zeros(y.shape()[1..].to_vec())?;
    let pairs: Vec<(usize, usize)> = (1..=opts.horizon).flat_map(|h| (0..series).map(move |s| (h, s))).collect();
    let results = run_cells(&pairs, opts.grid.jobs, |&(h, s)| {
        let a: Vec<f64> = tar_err[h - 1].column(s).iter().copied().collect();
        let b: Vec<f64> = var_err[h - 1].column(s).iter().copied().collect();
        dm_test(&a, &b, h)
    });
    let mut cells = Vec::with_capacity(pairs.len());
    let (mut rejections, mut favor_tar, mut favor_var) = (0, 0, 0);
    for (&(h, s), r) in pairs.iter().zip(results) {
        let r = r?;
        let favored = match r.favored_at(opts.alpha) {
            Favored::Model1 => {
                favor_tar += 1;
                "tar"
            }
            Favored::Model2 => {
                favor_var += 1;
                "var"
            }
            Favored::None => "none",
        };
        if favored != "none" {
            rejections += 1;
        }
        cells.push(DmCell {
            series: s,
            index: data_shape.multi_index(s),
            horizon: h,
            statistic: r.statistic,
            p_value: r.p_value,
            favored,
            degenerate: r.degenerate,
        });
    }
    Ok(ComparisonReport {
        split: (train, optn, test),
        selected_rank: best.rank.clone(),
        selected_lambda: best.lambda,
        selection: selection.clone(),
        cells,
        tar: ForecastReport::from_errors("tar", tar_err),
        var: ForecastReport::from_errors("var", var_err),
        rejections,
        favor_tar,
        favor_var,
    })
}

fn unit_vector(len: usize, rng: &mut rand_chacha::ChaCha8Rng) -> DVector<f64> {
    let v = standard_normal_matrix(len, 1, rng).column(0).into_owned();
    let n = v.norm();
    v / n
}

/// Series with rank-one dynamics `Y_t = s u (v' vec Y_{t-1}) + E_t` on a
/// `rows x cols` panel.
///
/// `u = b2 (x) b1` and `v = b2 (x) a1` share a column direction, with
/// `a1' b1` chosen so the spectral radius equals `radius`; `s = sqrt(rows * cols)`
/// spreads the predictable signal across all series.
pub fn simulate_rank_one_tar(rows: usize, cols: usize, t: usize, radius: f64, seed: u64) -> Result<DenseTensor> {
    let mut rng = rng_for(seed, 20);
    let s = ((rows * cols) as f64).sqrt();
    let c = radius / s;
    if c.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("radius {} too large for a {}x{} panel", radius, rows, cols)));
    }
    let b1 = unit_vector(rows, &mut rng);
    let mut z = unit_vector(rows, &mut rng);
    z -= &b1 * b1.dot(&z);
    let z = z.normalize();
    let a1 = &b1 * c + z * (1.0 - c * c).sqrt();
    let b2 = unit_vector(cols, &mut rng);
    let kron = |col: &DVector<f64>, row: &DVector<f64>| {
        DVector::from_fn(rows * cols, |i, _| row[i % rows] * col[i / rows])
    };
    let u = kron(&b2, &b1);
    let v = kron(&b2, &a1);
    let burn = 100;
    let noise = standard_normal_matrix(rows * cols, t + burn, &mut rng_for(seed, 21));
    let mut prev = DVector::zeros(rows * cols);
    let mut data = Vec::with_capacity(t * rows * cols);
    let mut obs = Vec::with_capacity(t);
    for step in 0..t + burn {
        let next = &u * (s * v.dot(&prev)) + noise.column(step);
        if step >= burn {
            obs.push(next.clone());
        }
        prev = next;
    }
    // time-first layout: entry (step, i) at step + t * i
    for i in 0..rows * cols {
        data.extend(obs.iter().map(|o| o[i]));
    }
    DenseTensor::new(vec![t, rows, cols], data)
}

/// Independent stable VAR(1) per column block of a `rows x cols` panel.
pub fn simulate_block_var(rows: usize, cols: usize, t: usize, radius: f64, seed: u64) -> Result<DenseTensor> {
    let burn = 100;
    let mut panel = vec![0.0; t * rows * cols];
    for b in 0..cols {
        let mut rng = rng_for(seed, 30 + b as u64);
        let raw = standard_normal_matrix(rows, rows, &mut rng);
        let rho = raw.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max).max(1e-12);
        let a = raw * (radius / rho);
        let noise = standard_normal_tensor(vec![rows, t + burn], &mut rng)?;
        let mut prev = DVector::zeros(rows);
        for step in 0..t + burn {
            let e = DVector::from_column_slice(&noise.data()[step * rows..(step + 1) * rows]);
            let next = &a * &prev + e;
            if step >= burn {
                for r in 0..rows {
                    panel[(step - burn) + t * (r + rows * b)] = next[r];
                }
            }
            prev = next;
        }
    }
    DenseTensor::new(vec![t, rows, cols], panel)
}
