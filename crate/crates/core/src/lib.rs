//! Tucker-structured tensor-on-tensor regression fitted by alternating least
//! squares, BIC model selection, tensor autoregression forecasting with
//! Diebold-Mariano comparison, and separable residual covariance analysis.

pub mod dtf;
pub mod error;
pub mod forecast;
pub mod format;
pub mod ingest;
pub mod linalg;
pub mod regression;
pub mod report;
pub mod residual;
pub mod selection;
pub mod simulation;
pub mod tensor;

pub use error::{Error, Result};
pub use regression::{fit, predict, Init, RegressionFit, RegressionSpec, TuckerCoefficient, TuckerRank};
pub use tensor::{DenseTensor, Matrix, ModePartition};
