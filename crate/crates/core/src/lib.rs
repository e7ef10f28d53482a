//! Fine-grained text-to-motion toolkit.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`motion`] — frame-feature motion sequences, normalization, mirroring,
//!   and the on-disk motion format (JSON sidecar + f32 binary).
//! - [`stepmark`] — lossless parser/serializer for `<step k: name>` marked
//!   descriptions plus the pseudo-code validator and response triage.
//! - [`prompt`] — the P1..P8 template catalog, LLM client contract, and the
//!   batch expansion pipeline (offline-fixture first, rate-limited).
//! - [`dataset`] — corpus pairing, mirroring augmentation, motion-disjoint
//!   splits, corpus statistics, and alignment-audit tallies.
//! - [`nn`] — a small reverse-mode autodiff tape over `f64` matrices with
//!   the transformer building blocks, Adam, and the checkpoint container.
//! - [`textenc`] — token-encoder profiles, per-step embeddings, step-aware
//!   self-attention, fine-coarse cross-attention, and the diffusion-step
//!   embedding.
//! - [`diffusion`] — DDPM schedule, forward corruption, the conditioned
//!   denoiser, training step, ancestral sampler, and the variant/ablation
//!   dispatch (including the AddFC baseline fusion).
//! - [`eval`] — contrastive text-motion evaluator, FID, R-precision,
//!   Diversity, and the multi-run report.
//! - [`render`] — deterministic stick-figure rasterization to PNG/GIF.
//! - [`synth`] — parameterized synthetic motion families and step-marked
//!   templates for desk-scale experiments.

pub mod dataset;
pub mod diffusion;
pub mod eval;
pub mod motion;
pub mod nn;
pub mod prompt;
pub mod render;
pub mod stepmark;
pub mod synth;
pub mod textenc;

pub use dataset::{AuditRecord, CorpusRecord, CorpusStats};
pub use diffusion::{GenerationRequest, ModelConfig, NoiseSchedule, TrainedModel, Variant};
pub use eval::{ContrastiveModel, EvalFeatures, EvalReport};
pub use motion::{MotionSequence, NormStats, Skeleton};
pub use stepmark::{CorpusLine, PseudoCodeBlock, ResponseVerdict, Step, StepMarkedText};
pub use textenc::{CoarseFeatures, FineFeatures, TextEmbeddings, TokenEncoder};
