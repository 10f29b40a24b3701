//! Monotone logistic additive models and their linearised (clipped-linear
//! link) counterparts, with the training, evaluation and comparison
//! machinery around them.
//!
//! * [`approx`]: the sigmoid, its squared-error optimal three-piece linear
//!   approximation and the dilogarithm used to derive the half-width.
//! * [`model`]: one- and two-layer additive models, linearisation and the
//!   JSON model document.
//! * [`train`]: constrained logistic regression and the binned one/two
//!   layer additive risk models built on it.
//! * [`metrics`]: AUC, calibration error, certainty fraction and stratified
//!   cross-validation.
//! * [`stats`]: Friedman / Iman-Davenport, Wilcoxon signed-rank with Holm
//!   correction, Hodges-Lehmann and the trinomial test.
//! * [`data`]: CSV ingestion, feature configuration, preprocessing and
//!   synthetic generators.

pub mod approx;
pub mod data;
pub mod metrics;
pub mod model;
pub mod special;
pub mod stats;
pub mod train;

mod error;

pub use error::{Error, Result};
