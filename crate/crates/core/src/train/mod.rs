//! Fitting sign-constrained logistic regression (NNLR) and the binned
//! additive risk models built on it (ARM1, and ARM2 which stacks ARM1
//! models per subscale).

mod arm;
mod binning;
mod encoding;
mod nnlr;

use thiserror::Error;

use crate::data::DataError;
use crate::model::ModelError;

pub use arm::{fit_arm1, fit_arm2, fit_model, fit_nnlr, ModelKind, TrainOptions};
pub use binning::bin_feature;
pub use encoding::{encode_monotone, BinEncoding, EncodingKind, MonotoneDirection};
pub use nnlr::{kkt_residual, solve_nnlr, solve_nnlr_from, NnlrFit, NnlrObjective, NnlrOptions};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid bin encoding: {0}")]
    InvalidEncoding(String),
    #[error("solver stopped after {iterations} iterations with projected-gradient residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("a two-layer model needs a subscale partition in the dataset config")]
    NoSubscales,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}
