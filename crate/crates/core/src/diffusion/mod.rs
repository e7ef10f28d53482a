//! Text-conditioned DDPM: schedule, denoiser, training, sampling, and the
//! variant/ablation dispatch.

mod cond;
mod model;
mod sample;
mod schedule;
mod train;

pub use cond::{addfc_fuse, build_cond_graph, build_cond_values, CondVars, GenerationRequest, Phase};
pub use model::{denoise_graph, denoise_values, init_model_params, make_encoder, TrainedModel, ENCODER_PREFIX};
pub use sample::{reverse_step, sample, X0_CLAMP};
pub use schedule::{make_schedule, q_sample, NoiseSchedule};
pub use train::{batch_loss_and_grads, randn, training_step, NoiseDraw, TrainBatch, TrainItem};

use crate::motion::MotionError;
use crate::stepmark::TruncateError;
use crate::textenc::TextEncodeError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("bad schedule range: {detail}")]
    BadRange { detail: String },
    #[error("diffusion step {t} out of range (T = {total})")]
    TOutOfRange { t: usize, total: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("variant input mismatch: {0}")]
    VariantInputMismatch(String),
    #[error("non-finite loss {0}; aborting the step")]
    NonFiniteLoss(f64),
    #[error(transparent)]
    Truncate(#[from] TruncateError),
    #[error(transparent)]
    TextEncode(#[from] TextEncodeError),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

/// Model variants selectable from the CLI and config snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    FineMotionDiffuse,
    #[serde(rename = "MotionDiffuse_coarse")]
    MotionDiffuseCoarse,
    #[serde(rename = "MotionDiffuse_detailed")]
    MotionDiffuseDetailed,
    #[serde(rename = "AddFC")]
    AddFc,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "FineMotionDiffuse" => Ok(Self::FineMotionDiffuse),
            "MotionDiffuse_coarse" => Ok(Self::MotionDiffuseCoarse),
            "MotionDiffuse_detailed" => Ok(Self::MotionDiffuseDetailed),
            "AddFC" => Ok(Self::AddFc),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::FineMotionDiffuse => "FineMotionDiffuse",
            Self::MotionDiffuseCoarse => "MotionDiffuse_coarse",
            Self::MotionDiffuseDetailed => "MotionDiffuse_detailed",
            Self::AddFc => "AddFC",
        };
        f.write_str(name)
    }
}

/// Ablation switches. Input-level truncations (`*_input`) apply at
/// inference only; dataset-level ones apply at train and test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ablation {
    #[serde(rename = "clip_unfrozen")]
    ClipUnfrozen,
    #[serde(rename = "use_E_per_step")]
    UseEPerStep,
    #[serde(rename = "no_cross_attention")]
    NoCrossAttention,
    #[serde(rename = "delFirstLast")]
    DelFirstLast,
    #[serde(rename = "delInner")]
    DelInner,
    #[serde(rename = "delFirstLast_input")]
    DelFirstLastInput,
    #[serde(rename = "delInner_input")]
    DelInnerInput,
}

pub const ALL_ABLATIONS: &[Ablation] = &[
    Ablation::ClipUnfrozen,
    Ablation::UseEPerStep,
    Ablation::NoCrossAttention,
    Ablation::DelFirstLast,
    Ablation::DelInner,
    Ablation::DelFirstLastInput,
    Ablation::DelInnerInput,
];

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clip_unfrozen" => Ok(Self::ClipUnfrozen),
            "use_E_per_step" => Ok(Self::UseEPerStep),
            "no_cross_attention" => Ok(Self::NoCrossAttention),
            "delFirstLast" => Ok(Self::DelFirstLast),
            "delInner" => Ok(Self::DelInner),
            "delFirstLast_input" => Ok(Self::DelFirstLastInput),
            "delInner_input" => Ok(Self::DelInnerInput),
            other => Err(format!("unknown ablation `{other}`")),
        }
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Self::ClipUnfrozen => "clip_unfrozen",
            Self::UseEPerStep => "use_E_per_step",
            Self::NoCrossAttention => "no_cross_attention",
            Self::DelFirstLast => "delFirstLast",
            Self::DelInner => "delInner",
            Self::DelFirstLastInput => "delFirstLast_input",
            Self::DelInnerInput => "delInner_input",
        };
        f.write_str(name)
    }
}

/// Token-encoder profile recorded in config snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EncoderProfile {
    /// Deterministic hash stub (unit tests; no parameters).
    HashStub,
    /// Trainable-then-frozen table with a hash-bucket vocabulary.
    Toy { buckets: usize },
}

/// Full model configuration; embedded in every checkpoint for exact reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: Variant,
    #[serde(default)]
    pub ablations: BTreeSet<Ablation>,
    pub d_model: usize,
    pub heads: usize,
    pub ffn_hidden: usize,
    pub text_layers: usize,
    pub cross_layers: usize,
    pub denoiser_layers: usize,
    pub motion_dim: usize,
    pub timesteps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub max_tokens: usize,
    pub encoder: EncoderProfile,
    pub seed: u64,
}

impl ModelConfig {
    /// Desk-scale defaults: small enough that the full train/eval cycle
    /// runs on a laptop in minutes.
    pub fn desk(variant: Variant) -> Self {
        Self {
            variant,
            ablations: BTreeSet::new(),
            d_model: 64,
            heads: 4,
            ffn_hidden: 256,
            text_layers: 4,
            cross_layers: 4,
            denoiser_layers: 2,
            motion_dim: crate::motion::schema::stick5::DIM,
            // 50 steps with the 1000-step reference range compressed 20x,
            // so the terminal signal level is ~0 and ancestral sampling
            // starts on-distribution.
            timesteps: 50,
            beta_start: 2e-3,
            beta_end: 0.4,
            max_tokens: 77,
            encoder: EncoderProfile::Toy { buckets: 512 },
            seed: 0,
        }
    }

    /// Tiny dimensions for gradient checks and wiring tests.
    pub fn tiny(variant: Variant) -> Self {
        Self {
            variant,
            ablations: BTreeSet::new(),
            d_model: 8,
            heads: 2,
            ffn_hidden: 16,
            text_layers: 1,
            cross_layers: 1,
            denoiser_layers: 1,
            motion_dim: 4,
            timesteps: 10,
            beta_start: 0.01,
            beta_end: 0.5,
            max_tokens: 16,
            encoder: EncoderProfile::Toy { buckets: 32 },
            seed: 0,
        }
    }

    pub fn has(&self, a: Ablation) -> bool {
        self.ablations.contains(&a)
    }

    pub fn schedule(&self) -> Result<NoiseSchedule, DiffusionError> {
        make_schedule(self.timesteps, self.beta_start, self.beta_end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip_spec_spellings() {
        for name in ["FineMotionDiffuse", "MotionDiffuse_coarse", "MotionDiffuse_detailed", "AddFC"] {
            let v: Variant = name.parse().unwrap();
            assert_eq!(v.to_string(), name);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{name}\""));
        }
    }

    #[test]
    fn ablation_names_round_trip_spec_spellings() {
        for name in [
            "clip_unfrozen",
            "use_E_per_step",
            "no_cross_attention",
            "delFirstLast",
            "delInner",
            "delFirstLast_input",
            "delInner_input",
        ] {
            let a: Ablation = name.parse().unwrap();
            assert_eq!(a.to_string(), name);
        }
        assert_eq!(ALL_ABLATIONS.len(), 7);
    }

    #[test]
    fn config_snapshot_round_trips() {
        let mut cfg = ModelConfig::desk(Variant::FineMotionDiffuse);
        cfg.ablations.insert(Ablation::DelInnerInput);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ModelConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        assert!(json.contains("delInner_input"));
    }
}
