//! Synthetic designs: structural-coefficient recovery and collinear array-normal
//! regression scored on a fresh holdout sample.
//!
//! Every random draw comes from a ChaCha8 stream keyed by `(seed, stream)`, so
//! results depend only on the seed and never on evaluation order or threading.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::cholesky_lower;
use crate::regression::{TuckerCoefficient, TuckerRank};
use crate::selection::{csv_err, grid_search, run_cells, GridOptions, Scoring, SelectionReport};
use crate::tensor::{contracted_product, n_mode_product, DenseTensor, Matrix};

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal_tensor(shape: Vec<usize>, rng: &mut ChaCha8Rng) -> Result<DenseTensor> {
    let len = shape.iter().product();
    DenseTensor::new(shape, (0..len).map(|_| StandardNormal.sample(rng)).collect())
}

pub fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// `Sigma[p, q] = rho^|p - q|`.
pub fn ar1_correlation(size: usize, rho: f64) -> Matrix {
    Matrix::from_fn(size, size, |p, q| rho.powi((p as i32 - q as i32).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayNormalSpec {
    /// `T x I_1 x .. x I_N`.
    pub shape: Vec<usize>,
    /// One correlation parameter per mode, each in `[0, 1)`.
    pub rhos: Vec<f64>,
    pub seed: u64,
}

impl ArrayNormalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.shape.len() != self.rhos.len() {
            return Err(Error::InvalidArgument(format!(
                "{} modes but {} correlation parameters",
                self.shape.len(),
                self.rhos.len()
            )));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(0.0..1.0).contains(*r)) {
            return Err(Error::InvalidArgument(format!("rho must lie in [0, 1), got {}", r)));
        }
        Ok(())
    }
}

/// `X = Z x_1 L_T x_2 L_1 .. ` with `L_i` the lower Cholesky factor of
/// `Sigma_i = rho_i^|p-q|`, drawn from stream 0 of the spec's seed.
pub fn generate_array_normal(spec: &ArrayNormalSpec) -> Result<DenseTensor> {
    generate_array_normal_stream(spec, 0)
}

pub fn generate_array_normal_stream(spec: &ArrayNormalSpec, stream: u64) -> Result<DenseTensor> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, stream);
    let mut t = standard_normal_tensor(spec.shape.clone(), &mut rng)?;
    for (k, (&size, &rho)) in spec.shape.iter().zip(&spec.rhos).enumerate() {
        if rho == 0.0 || size == 1 {
            continue;
        }
        let l = cholesky_lower(&ar1_correlation(size, rho))
            .ok_or_else(|| Error::Numerical(format!("correlation for rho = {} is not positive definite", rho)))?;
        t = n_mode_product(&t, &l, k)?;
    }
    Ok(t)
}

/// `kappa` such that `||kappa * signal||^2 / ||noise||^2 == target`.
pub fn scale_to_snr(signal: &DenseTensor, noise: &DenseTensor, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::InvalidArgument(format!("target SNR must be positive, got {}", target)));
    }
    let s = signal.squared_norm();
    let e = noise.squared_norm();
    if s == 0.0 {
        return Err(Error::InvalidData("signal is identically zero".into()));
    }
    if e == 0.0 {
        return Err(Error::InvalidData("noise is identically zero".into()));
    }
    Ok((target * e / s).sqrt())
}

pub fn snr(signal: &DenseTensor, noise: &DenseTensor) -> f64 {
    signal.squared_norm() / noise.squared_norm()
}

/// Tucker coefficient with standard-normal core and factors.
pub fn random_tucker(
    input_shape: &[usize],
    output_shape: &[usize],
    rank: &TuckerRank,
    rng: &mut ChaCha8Rng,
) -> Result<TuckerCoefficient> {
    let core = standard_normal_tensor(rank.core_shape(), rng)?;
    let input = input_shape.iter().zip(&rank.input).map(|(&i, &f)| standard_normal_matrix(i, f, rng)).collect();
    let output =
        output_shape.iter().zip(&rank.output).map(|(&j, &p)| standard_normal_matrix(j, p, rng)).collect();
    TuckerCoefficient::new(core, input, output)
}

/// `<X, B>` over the trailing modes of `x` against the leading modes of `b`.
pub fn contract_regressor(x: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    let modes_x: Vec<usize> = (1..x.order()).collect();
    let modes_b: Vec<usize> = (0..x.order() - 1).collect();
    contracted_product(x, b, &modes_x, &modes_b)
}

/// Smooth `rows x cols x channels` pattern: a few Gaussian blobs plus a
/// diagonal colour gradient, values roughly in `[0, 1.5]`.
pub fn smooth_pattern(rows: usize, cols: usize, channels: usize, seed: u64) -> Result<DenseTensor> {
    let mut rng = rng_for(seed, 7);
    let blobs: Vec<(f64, f64, f64, Vec<f64>)> = (0..4)
        .map(|_| {
            let u: [f64; 3] = [sample_unit(&mut rng), sample_unit(&mut rng), sample_unit(&mut rng)];
            let amp = (0..channels).map(|_| 0.3 + sample_unit(&mut rng)).collect();
            (0.15 + 0.7 * u[0], 0.15 + 0.7 * u[1], 0.12 + 0.15 * u[2], amp)
        })
        .collect();
    DenseTensor::from_fn(vec![rows, cols, channels], |idx| {
        let y = idx[0] as f64 / rows.max(2) as f64;
        let x = idx[1] as f64 / cols.max(2) as f64;
        let c = idx[2];
        let tilt = 0.25 * (1.0 + (c as f64 + 1.0) * 0.3) * (x + y) * 0.5;
        tilt + blobs
            .iter()
            .map(|(cy, cx, s, amp)| amp[c] * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
            .sum::<f64>()
    })
}

fn sample_unit(rng: &mut ChaCha8Rng) -> f64 {
    use rand::Rng;
    rng.random::<f64>()
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub n_samples: usize,
    pub noise_sd: f64,
    /// Leading modes of the true coefficient that belong to the regressor.
    pub input_order: usize,
    pub ranks: Vec<TuckerRank>,
    pub grid: GridOptions,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryRow {
    pub rank: TuckerRank,
    pub w: usize,
    pub ssr: f64,
    pub bic: f64,
    pub relative_error: f64,
    /// `1 - w / |B|`.
    pub compression: f64,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub rows: Vec<RecoveryRow>,
    pub best: Option<usize>,
    #[serde(skip)]
    pub best_coefficient: Option<DenseTensor>,
}

impl RecoveryReport {
    pub fn best_row(&self) -> Option<&RecoveryRow> {
        self.best.map(|i| &self.rows[i])
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "w", "ssr", "bic", "relative_error", "compression", "converged", "best"])
            .map_err(csv_err)?;
        for (i, r) in self.rows.iter().enumerate() {
            out.write_record([
                r.rank.to_string(),
                r.w.to_string(),
                fmt_f64(r.ssr),
                fmt_f64(r.bic),
                fmt_f64(r.relative_error),
                fmt_f64(r.compression),
                if r.error.is_some() { "failed".into() } else { r.converged.to_string() },
                (self.best == Some(i)).to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Regresses `Y = <X, B> + E` with standard-normal `X`, scores each rank by
/// training BIC and measures `||B_hat - B|| / ||B||`.
pub fn run_recovery_experiment(true_b: &DenseTensor, cfg: &RecoveryConfig) -> Result<RecoveryReport> {
    if true_b.order() < 2 || cfg.input_order == 0 || cfg.input_order >= true_b.order() {
        return Err(Error::InvalidArgument(format!(
            "coefficient {:?} needs at least one input and one output mode (input order {})",
            true_b.shape(),
            cfg.input_order
        )));
    }
    let in_shape = &true_b.shape()[..cfg.input_order];
    let mut x_shape = vec![cfg.n_samples];
    x_shape.extend_from_slice(in_shape);
    let x = standard_normal_tensor(x_shape, &mut rng_for(cfg.seed, 1))?;
    let signal = contract_regressor(&x, true_b)?;
    let y = if cfg.noise_sd > 0.0 {
        let noise = standard_normal_tensor(signal.shape().to_vec(), &mut rng_for(cfg.seed, 2))?;
        signal.add(&noise.scale(cfg.noise_sd))?
    } else {
        signal
    };
    let mut opts = cfg.grid.clone();
    opts.keep_fits = true;
    let report = grid_search(&x, &y, &cfg.ranks, &[opts.base.lambda], Scoring::Train, &opts)?;
    let norm = true_b.squared_norm().sqrt();
    let total = true_b.len() as f64;
    let mut best_coefficient = None;
    let rows = report
        .cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let relative_error = match &cell.fit {
                Some(f) => {
                    let b_hat = f.slope()?;
                    let err = b_hat.sub(true_b)?.squared_norm().sqrt() / norm;
                    if report.best == Some(i) {
                        best_coefficient = Some(b_hat);
                    }
                    err
                }
                None => f64::NAN,
            };
            Ok(RecoveryRow {
                rank: cell.rank.clone(),
                w: cell.w,
                ssr: cell.ssr,
                bic: cell.bic,
                relative_error,
                compression: 1.0 - cell.w as f64 / total,
                converged: cell.converged,
                error: cell.error.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryReport { rows, best: report.best, best_coefficient })
}

#[derive(Debug, Clone, Serialize)]
pub struct CollinearRegressionScenario {
    /// Regressor design; its trailing modes are also the response modes.
    pub array_normal: ArrayNormalSpec,
    pub true_rank: TuckerRank,
    pub snr: f64,
    pub seed: u64,
}

impl CollinearRegressionScenario {
    /// `100 x 6 x 19` regressor with `rho = (0.1, 0.95, 0.8)` and a
    /// `2 x 3 x 2 x 3` core.
    pub fn benchmark(snr: f64, seed: u64) -> Self {
        CollinearRegressionScenario {
            array_normal: ArrayNormalSpec { shape: vec![100, 6, 19], rhos: vec![0.1, 0.95, 0.8], seed },
            true_rank: TuckerRank::new(vec![2, 3], vec![2, 3]),
            snr,
            seed,
        }
    }
}

/// Symmetric rank grid `[f, g, f, g]`.
pub fn symmetric_rank_grid(fs: &[usize], gs: &[usize]) -> Vec<TuckerRank> {
    fs.iter().flat_map(|&f| gs.iter().map(move |&g| TuckerRank::new(vec![f, g], vec![f, g]))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CollinearityReport {
    pub snr: f64,
    pub seed: u64,
    pub kappa: f64,
    pub selection: SelectionReport,
}

/// Simulated collinear data sets: training pair, holdout pair and the scaled signal.
pub struct CollinearData {
    pub x: DenseTensor,
    pub y: DenseTensor,
    pub x_new: DenseTensor,
    pub y_new: DenseTensor,
    pub b: DenseTensor,
    pub kappa: f64,
}

pub fn simulate_collinear(scenario: &CollinearRegressionScenario) -> Result<CollinearData> {
    let spec = &scenario.array_normal;
    spec.validate()?;
    let modes = &spec.shape[1..];
    let mut brng = rng_for(scenario.seed, 10);
    let b = random_tucker(modes, modes, &scenario.true_rank, &mut brng)?.reconstruct()?;
    let x = generate_array_normal_stream(spec, 11)?;
    let x_new = generate_array_normal_stream(spec, 13)?;
    let signal = contract_regressor(&x, &b)?;
    let noise = standard_normal_tensor(signal.shape().to_vec(), &mut rng_for(scenario.seed, 12))?;
    let kappa = scale_to_snr(&signal, &noise, scenario.snr)?;
    let y = signal.scale(kappa).add(&noise)?;
    let noise_new = standard_normal_tensor(signal.shape().to_vec(), &mut rng_for(scenario.seed, 14))?;
    let y_new = contract_regressor(&x_new, &b)?.scale(kappa).add(&noise_new)?;
    Ok(CollinearData { x, y, x_new, y_new, b: b.scale(kappa), kappa })
}

/// Fits the grid on the training sample and scores by BIC on a fresh sample
/// drawn with the same coefficient.
pub fn run_collinearity_experiment(
    scenario: &CollinearRegressionScenario,
    ranks: &[TuckerRank],
    lambdas: &[f64],
    opts: &GridOptions,
) -> Result<CollinearityReport> {
    let data = simulate_collinear(scenario)?;
    let selection = grid_search(
        &data.x,
        &data.y,
        ranks,
        lambdas,
        Scoring::Holdout { x: &data.x_new, y: &data.y_new },
        opts,
    )?;
    Ok(CollinearityReport { snr: scenario.snr, seed: scenario.seed, kappa: data.kappa, selection })
}

/// Runs one experiment per seed; each seed is independent and results are
/// returned in seed order regardless of `jobs`.
pub fn run_collinearity_seeds(
    snr: f64,
    seeds: &[u64],
    ranks: &[TuckerRank],
    lambdas: &[f64],
    opts: &GridOptions,
    jobs: usize,
) -> Result<Vec<CollinearityReport>> {
    let mut inner = opts.clone();
    inner.jobs = 1;
    inner.keep_fits = false;
    run_cells(seeds, jobs, |&seed| {
        run_collinearity_experiment(&CollinearRegressionScenario::benchmark(snr, seed), ranks, lambdas, &inner)
    })
    .into_iter()
    .collect()
}

/// Per-lambda minimum BIC and its `(f, g)`, one block of columns per report.
pub fn write_table1_csv<W: Write>(reports: &[&CollinearityReport], lambdas: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["lambda".to_string()];
    for r in reports {
        header.push(format!("bic_snr{}", r.snr));
        header.push(format!("f_snr{}", r.snr));
        header.push(format!("g_snr{}", r.snr));
    }
    out.write_record(&header).map_err(csv_err)?;
    for &lambda in lambdas {
        let mut row = vec![fmt_f64(lambda)];
        for r in reports {
            match r.selection.best_for_lambda(lambda) {
                Some(c) => {
                    row.push(fmt_f64(c.bic));
                    row.push(c.rank.input.first().map(|v| v.to_string()).unwrap_or_default());
                    row.push(c.rank.input.get(1).map(|v| v.to_string()).unwrap_or_default());
                }
                None => row.extend(["".to_string(), "".to_string(), "".to_string()]),
            }
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// How often each `(rank, lambda)` was selected.
pub fn selection_frequency(reports: &[CollinearityReport]) -> BTreeMap<(Vec<usize>, String), usize> {
    let mut counts = BTreeMap::new();
    for r in reports {
        if let Some(c) = r.selection.best_cell() {
            *counts.entry((c.rank.flat(), fmt_f64(c.lambda))).or_insert(0) += 1;
        }
    }
    counts
}

pub fn write_frequency_csv<W: Write>(reports: &[CollinearityReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["f", "g", "lambda", "count", "fraction"]).map_err(csv_err)?;
    let total = reports.len().max(1) as f64;
    for ((rank, lambda), count) in selection_frequency(reports) {
        out.write_record([
            rank.first().map(|v| v.to_string()).unwrap_or_default(),
            rank.get(1).map(|v| v.to_string()).unwrap_or_default(),
            lambda,
            count.to_string(),
            fmt_f64(count as f64 / total),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
