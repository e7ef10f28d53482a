//! Text encoding: frozen token-encoder profiles, per-step embeddings,
//! step-aware self-attention, fine-coarse cross-attention, and the
//! diffusion-step embedding.
//!
//! Long descriptions never hit the encoder's context limit as a whole:
//! each step is encoded separately and averaged into one row, then the
//! step rows get hard sinusoidal position encodings and interact through
//! a self-attention stack. Coarse descriptions are encoded as a token
//! sequence with `[S]`/`[E]` markers; a cross-attention stack (queries =
//! coarse positions, keys/values = step rows) aligns the two granularities
//! and the `[E]` position seeds the diffusion-step embedding.

mod blocks;
mod encoder;

pub use blocks::{
    diffusion_step_embedding_graph, encode_fine, encode_step, fine_coarse_cross_attention_graph,
    init_cross_attention_params, init_step_attention_params, init_timestep_params,
    positional_encoding, step_rows_graph, step_self_attention_graph, timestep_row, StepEmbedMode,
};
pub use encoder::{
    tokenize_words, HashStubEncoder, RecordingEncoder, TableEncoder, TokenEncoder, TokenEncoding,
    Vocab,
};

use ndarray::Array2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TextEncodeError {
    #[error("step text is empty")]
    EmptyStep,
    #[error("positional encoding dimension {0} is odd")]
    OddDimension(usize),
    #[error("diffusion step {t} out of range (T = {total})")]
    TOutOfRange { t: usize, total: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Per-step features, one row per step in step order.
#[derive(Debug, Clone, PartialEq)]
pub struct FineFeatures {
    pub rows: Array2<f64>,
}

/// Coarse token features with the `[S]`/`[E]` positions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseFeatures {
    pub rows: Array2<f64>,
    pub s_index: usize,
    pub e_index: usize,
    pub truncated: bool,
}

/// Final conditioning sequence plus the diffusion-step embedding base.
/// `e_index` is `None` only when the cross-attention bypass is active;
/// otherwise `e_embed` equals `cond` row `e_index` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEmbeddings {
    pub cond: Array2<f64>,
    pub e_index: Option<usize>,
    pub e_embed: Array2<f64>,
}

impl TextEmbeddings {
    pub fn check(&self) -> Result<(), TextEncodeError> {
        if let Some(e) = self.e_index {
            if e >= self.cond.nrows() {
                return Err(TextEncodeError::ShapeMismatch(format!(
                    "e_index {e} out of range for cond with {} rows",
                    self.cond.nrows()
                )));
            }
            for c in 0..self.cond.ncols() {
                if self.e_embed[(0, c)] != self.cond[(e, c)] {
                    return Err(TextEncodeError::ShapeMismatch(
                        "e_embed differs from cond[e_index]".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}
