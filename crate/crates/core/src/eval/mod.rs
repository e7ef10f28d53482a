//! Contrastive text-motion evaluator and the FID / R-precision /
//! Diversity metric stack.

mod contrastive;
mod fid;
mod metrics;
mod report;

pub use contrastive::{
    init_contrastive_params, train_contrastive, ContrastiveConfig, ContrastiveModel,
    ContrastivePair, MARGIN,
};
pub use fid::{fid, symmetric_eig, FidOutput, FID_MIN_SAMPLES, FID_REGULARIZER};
pub use metrics::{diversity, r_precision, DEFAULT_NEGATIVES};
pub use report::{evaluate_model, noise_floor_fid, EvalReport, MetricReport, SideReport};

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("too few samples for {what}: have {have}, need {need}")]
    TooFewSamples { what: String, have: usize, need: usize },
    #[error("negative pool too small: have {have}, need {need}")]
    PoolTooSmall { have: usize, need: usize },
    #[error("feature dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite loss {0}")]
    NonFiniteLoss(f64),
    #[error("evaluation inputs: {0}")]
    Inputs(String),
}

/// Fixed-dimension eval-space vectors with their source ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFeatures {
    pub rows: Array2<f64>,
    pub ids: Vec<String>,
}
