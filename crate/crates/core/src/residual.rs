//! Separable (Kronecker) covariance of regression residuals estimated by the
//! flip-flop fixed point, plus PCA biplot coordinates of the correlations.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::linalg::{cholesky_lower, invert_lower, top_eigen};
use crate::regression::{predict, RegressionFit};
use crate::selection::csv_err;
use crate::tensor::{n_mode_product, unfold, DenseTensor, Matrix};

/// How the covariance along the sample mode (mode 0) is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleModePolicy {
    /// Estimated like every other mode.
    #[default]
    Estimate,
    /// Held at the identity; samples are treated as independent draws.
    Independent,
}

#[derive(Debug, Clone)]
pub struct FlipFlopOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub sample_mode: SampleModePolicy,
}

impl Default for FlipFlopOptions {
    fn default() -> Self {
        FlipFlopOptions { max_iters: 200, tol: 1e-8, sample_mode: SampleModePolicy::Estimate }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeCorrelation {
    pub mode: usize,
    #[serde(serialize_with = "ser_rows")]
    pub matrix: Matrix,
}

fn ser_rows<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
    serde::Serialize::serialize(&rows, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparableCorrelationSet {
    /// One entry per estimated mode, in mode order.
    pub correlations: Vec<ModeCorrelation>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest relative Frobenius change across modes, per sweep.
    pub change_trace: Vec<f64>,
}

impl SeparableCorrelationSet {
    pub fn for_mode(&self, mode: usize) -> Option<&Matrix> {
        self.correlations.iter().find(|c| c.mode == mode).map(|c| &c.matrix)
    }
}

/// `E = Y - A - <X, B>`.
pub fn residuals_from_fit(fit: &RegressionFit, x: &DenseTensor, y: &DenseTensor) -> Result<DenseTensor> {
    let yhat = predict(fit, x)?;
    if yhat.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "response {:?} does not match fitted {:?}",
            y.shape(),
            yhat.shape()
        )));
    }
    y.sub(&yhat)
}

fn inverse_sqrt(sigma: &Matrix) -> Result<Matrix> {
    let l = cholesky_lower(sigma)
        .ok_or_else(|| Error::Numerical("mode covariance lost positive definiteness".into()))?;
    invert_lower(&l).ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))
}

/// Alternating estimate of `Sigma_m = E[E_(m) E_(m)']` with every other mode
/// whitened by its current `Sigma^{-1/2}`. Covariances start at the identity,
/// are kept at trace `dim` during iteration and returned as correlations.
pub fn flip_flop(residuals: &DenseTensor, opts: &FlipFlopOptions) -> Result<SeparableCorrelationSet> {
    if residuals.order() < 2 {
        return Err(Error::InvalidShape(format!("residual tensor {:?} needs order >= 2", residuals.shape())));
    }
    if !residuals.all_finite() {
        return Err(Error::InvalidData("non-finite residuals".into()));
    }
    if residuals.squared_norm() == 0.0 {
        return Err(Error::InvalidData("residuals are identically zero".into()));
    }
    let order = residuals.order();
    let first = match opts.sample_mode {
        SampleModePolicy::Estimate => 0,
        SampleModePolicy::Independent => 1,
    };
    let modes: Vec<usize> = (first..order).filter(|&m| residuals.shape()[m] > 1).collect();
    let shape = residuals.shape();
    let mut sigma: Vec<Matrix> = shape.iter().map(|&d| Matrix::identity(d, d)).collect();
    let mut whiten: Vec<Option<Matrix>> = vec![None; order];
    let total = residuals.len() as f64;
    let mut change_trace = Vec::new();
    let mut converged = modes.is_empty();
    let mut iterations = 0;
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let mut worst = 0.0f64;
        for &m in &modes {
            let mut e = residuals.clone();
            for (k, w) in whiten.iter().enumerate() {
                if let (true, Some(w)) = (k != m, w) {
                    e = n_mode_product(&e, w, k)?;
                }
            }
            let d = shape[m];
            let em = unfold(&e, m)?;
            let mut s = &em * em.transpose() * (d as f64 / total);
            let rest = residuals.len() / d;
            if rest < d {
                let jitter = 1e-8 * s.trace() / d as f64;
                for i in 0..d {
                    s[(i, i)] += jitter;
                }
            }
            let tr = s.trace();
            if !(tr > 0.0) {
                return Err(Error::Numerical(format!("mode {} covariance has zero trace", m)));
            }
            s *= d as f64 / tr;
            let change = (&s - &sigma[m]).norm() / sigma[m].norm();
            worst = worst.max(change);
            whiten[m] = Some(inverse_sqrt(&s)?);
            sigma[m] = s;
        }
        change_trace.push(worst);
        converged = worst < opts.tol;
    }
    let correlations = (first..order)
        .map(|m| ModeCorrelation { mode: m, matrix: to_correlation(&sigma[m]) })
        .collect();
    Ok(SeparableCorrelationSet { correlations, iterations, converged, change_trace })
}

/// `D^{-1/2} S D^{-1/2}` with an exact unit diagonal.
pub fn to_correlation(s: &Matrix) -> Matrix {
    let d: Vec<f64> = (0..s.nrows()).map(|i| s[(i, i)].sqrt()).collect();
    Matrix::from_fn(s.nrows(), s.ncols(), |i, j| {
        if i == j { 1.0 } else { (s[(i, j)] / (d[i] * d[j])).clamp(-1.0, 1.0) }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PcaResult {
    /// All eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalue share of each returned component.
    pub explained: Vec<f64>,
    /// `K x c` biplot loadings `v_k sqrt(lambda_k)`, `c = min(2, K)`.
    #[serde(serialize_with = "ser_rows")]
    pub loadings: Matrix,
}

const CORR_TOL: f64 = 1e-8;

/// First two principal components of a correlation matrix; each component's
/// largest-magnitude loading is made positive.
pub fn correlation_pca(corr: &Matrix) -> Result<PcaResult> {
    let k = corr.nrows();
    if k == 0 || corr.ncols() != k {
        return Err(Error::InvalidShape(format!("correlation matrix must be square, got {:?}", corr.shape())));
    }
    for i in 0..k {
        if (corr[(i, i)] - 1.0).abs() > CORR_TOL {
            return Err(Error::InvalidData(format!("diagonal entry {} is {}, not 1", i, corr[(i, i)])));
        }
        for j in 0..i {
            if (corr[(i, j)] - corr[(j, i)]).abs() > CORR_TOL {
                return Err(Error::InvalidData("correlation matrix is not symmetric".into()));
            }
        }
    }
    let (values, vectors) = top_eigen(corr, k);
    if values.last().is_some_and(|&v| v < -CORR_TOL * k as f64) {
        return Err(Error::InvalidData(format!("correlation matrix has eigenvalue {}", values[k - 1])));
    }
    let c = k.min(2);
    let mut loadings = Matrix::zeros(k, c);
    for comp in 0..c {
        let v = vectors.column(comp);
        let pivot = (0..k).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = values[comp].max(0.0).sqrt() * sign;
        for i in 0..k {
            loadings[(i, comp)] = v[i] * scale;
        }
    }
    let trace: f64 = values.iter().sum();
    let explained = values[..c].iter().map(|v| v / trace).collect();
    Ok(PcaResult { eigenvalues: values, explained, loadings })
}

fn labels_or_index(labels: Option<&[String]>, k: usize) -> Vec<String> {
    match labels {
        Some(l) if l.len() == k => l.to_vec(),
        _ => (0..k).map(|i| i.to_string()).collect(),
    }
}

pub fn write_correlation_csv<W: Write>(corr: &Matrix, labels: Option<&[String]>, w: W) -> Result<()> {
    let names = labels_or_index(labels, corr.nrows());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["label".to_string()];
    header.extend(names.iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    for (i, name) in names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend((0..corr.ncols()).map(|j| fmt_f64(corr[(i, j)])));
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_biplot_csv<W: Write>(pca: &PcaResult, labels: Option<&[String]>, w: W) -> Result<()> {
    let k = pca.loadings.nrows();
    let names = labels_or_index(labels, k);
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["label", "pc1", "pc2"]).map_err(csv_err)?;
    for (i, name) in names.iter().enumerate() {
        let pc2 = if pca.loadings.ncols() > 1 { pca.loadings[(i, 1)] } else { 0.0 };
        out.write_record([name.clone(), fmt_f64(pca.loadings[(i, 0)]), fmt_f64(pc2)]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
