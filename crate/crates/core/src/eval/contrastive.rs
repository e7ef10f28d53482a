//! Text-motion contrastive evaluator: small transformer branches
//! projecting both modalities into one unit-norm eval space, trained with
//! a bidirectional margin loss over in-batch negatives.

use crate::eval::{EvalError, EvalFeatures};
use crate::motion::NormStats;
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
use crate::nn::layers::{init_encoder_layer, init_linear, GraphBuilder};
use crate::nn::params::{Adam, ParamStore};
use crate::nn::tape::Var;
use crate::textenc::{positional_encoding, TableEncoder, TokenEncoder};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MARGIN: f64 = 0.5;
const TXT: &str = "ceval.txt";
const MOT: &str = "ceval.mot";
const TOK: &str = "ceval.tok.embed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastiveConfig {
    pub d_model: usize,
    pub d_eval: usize,
    pub heads: usize,
    pub layers: usize,
    pub ffn_hidden: usize,
    pub motion_dim: usize,
    pub max_tokens: usize,
    pub vocab_buckets: usize,
    pub margin: f64,
    pub seed: u64,
}

impl ContrastiveConfig {
    pub fn desk(motion_dim: usize) -> Self {
        Self {
            d_model: 64,
            d_eval: 32,
            heads: 4,
            layers: 2,
            ffn_hidden: 128,
            motion_dim,
            max_tokens: 256,
            vocab_buckets: 512,
            margin: MARGIN,
            seed: 0,
        }
    }

    pub fn tiny(motion_dim: usize) -> Self {
        Self {
            d_model: 16,
            d_eval: 8,
            heads: 2,
            layers: 1,
            ffn_hidden: 32,
            motion_dim,
            max_tokens: 64,
            vocab_buckets: 64,
            margin: MARGIN,
            seed: 0,
        }
    }
}

/// The trained evaluator: parameters plus its config and the motion
/// normalization stats it was trained with.
#[derive(Debug, Clone)]
pub struct ContrastiveModel {
    pub store: ParamStore,
    pub config: ContrastiveConfig,
    pub stats: NormStats,
}

fn encoder(config: &ContrastiveConfig) -> TableEncoder {
    let mut enc = TableEncoder::toy(config.d_model, config.max_tokens, config.vocab_buckets);
    enc.param_name = TOK.into();
    enc
}

pub fn init_contrastive_params(store: &mut ParamStore, config: &ContrastiveConfig) {
    encoder(config).init_params(store, config.seed);
    let d = config.d_model;
    for l in 0..config.layers {
        init_encoder_layer(store, &format!("{TXT}.l{l}"), d, config.ffn_hidden, config.seed);
        init_encoder_layer(store, &format!("{MOT}.l{l}"), d, config.ffn_hidden, config.seed);
    }
    init_linear(store, &format!("{TXT}.proj"), d, config.d_eval, config.seed);
    init_linear(store, &format!("{MOT}.in"), config.motion_dim, d, config.seed);
    init_linear(store, &format!("{MOT}.proj"), d, config.d_eval, config.seed);
}

fn text_branch(
    g: &mut GraphBuilder<'_>,
    enc: &TableEncoder,
    text: &str,
    config: &ContrastiveConfig,
) -> Var {
    let (rows, _) = enc.encode_on_graph(g, text).expect("table encoding is total");
    let mut h = rows;
    for l in 0..config.layers {
        h = g.encoder_layer(h, &format!("{TXT}.l{l}"), config.heads);
    }
    let pooled = g.tape.mean_rows(h);
    let projected = g.linear(pooled, &format!("{TXT}.proj"));
    g.tape.normalize_rows(projected)
}

fn motion_branch(g: &mut GraphBuilder<'_>, motion_norm: &Array2<f64>, config: &ContrastiveConfig) -> Var {
    let x = g.c(motion_norm.clone());
    let mut h = g.linear(x, &format!("{MOT}.in"));
    let pe = g.c(positional_encoding(motion_norm.nrows(), config.d_model).expect("even width"));
    h = g.tape.add(h, pe);
    for l in 0..config.layers {
        h = g.encoder_layer(h, &format!("{MOT}.l{l}"), config.heads);
    }
    let pooled = g.tape.mean_rows(h);
    let projected = g.linear(pooled, &format!("{MOT}.proj"));
    g.tape.normalize_rows(projected)
}

/// One (text, normalized motion) training pair.
#[derive(Debug, Clone)]
pub struct ContrastivePair {
    pub text: String,
    pub motion_norm: Array2<f64>,
}

/// Trains the evaluator with the margin-based retrieval loss; matched
/// pairs are pulled above all in-batch mismatches on both sides.
/// Deterministic under the seed.
pub fn train_contrastive(
    pairs: &[ContrastivePair],
    config: &ContrastiveConfig,
    stats: &NormStats,
    steps: usize,
    batch_size: usize,
    lr: f64,
) -> Result<ContrastiveModel, EvalError> {
    assert!(pairs.len() >= 2, "contrastive training needs at least two pairs");
    let mut store = ParamStore::new();
    init_contrastive_params(&mut store, config);
    let enc = encoder(config);
    let mut adam = Adam::new(lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch = batch_size.clamp(2, pairs.len());
    for _ in 0..steps {
        let grads = {
            let mut g = GraphBuilder::new(&store);
            let mut text_rows = Vec::with_capacity(batch);
            let mut motion_rows = Vec::with_capacity(batch);
            for _ in 0..batch {
                let idx = rng.gen_range(0..pairs.len());
                text_rows.push(text_branch(&mut g, &enc, &pairs[idx].text, config));
                motion_rows.push(motion_branch(&mut g, &pairs[idx].motion_norm, config));
            }
            let texts = g.tape.concat_rows(&text_rows);
            let motions = g.tape.concat_rows(&motion_rows);
            let motions_t = g.tape.transpose(motions);
            let scores = g.tape.matmul(texts, motions_t);
            let loss = g.tape.hinge_retrieval(scores, config.margin);
            let value = g.tape.value(loss)[(0, 0)];
            if !value.is_finite() {
                return Err(EvalError::NonFiniteLoss(value));
            }
            let grads = g.tape.backward(loss);
            g.tape.param_grads(&grads)
        };
        adam.step(&mut store, &grads);
    }
    Ok(ContrastiveModel { store, config: config.clone(), stats: stats.clone() })
}

impl ContrastiveModel {
    /// Unit-norm eval-space embeddings of texts.
    pub fn encode_texts(&self, texts: &[String]) -> EvalFeatures {
        let enc = encoder(&self.config);
        let mut rows = Array2::zeros((texts.len(), self.config.d_eval));
        for (i, text) in texts.iter().enumerate() {
            let mut g = GraphBuilder::new(&self.store);
            let v = text_branch(&mut g, &enc, text, &self.config);
            rows.row_mut(i).assign(&g.tape.value(v).row(0));
        }
        EvalFeatures { ids: texts.iter().map(|t| t.chars().take(24).collect()).collect(), rows }
    }

    /// Unit-norm eval-space embeddings of normalized motions.
    pub fn encode_motions(&self, motions: &[Array2<f64>], ids: &[String]) -> EvalFeatures {
        let mut rows = Array2::zeros((motions.len(), self.config.d_eval));
        for (i, m) in motions.iter().enumerate() {
            let mut g = GraphBuilder::new(&self.store);
            let v = motion_branch(&mut g, m, &self.config);
            rows.row_mut(i).assign(&g.tape.value(v).row(0));
        }
        EvalFeatures { ids: ids.to_vec(), rows }
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let metadata = serde_json::json!({
            "kind": "contrastive_evaluator",
            "config": self.config,
            "norm_stats": self.stats,
        });
        save_checkpoint(path, &self.store, metadata)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let (store, metadata) = load_checkpoint(path)?;
        let config: ContrastiveConfig = serde_json::from_value(metadata["config"].clone())?;
        let stats: NormStats = serde_json::from_value(metadata["norm_stats"].clone())?;
        Ok(Self { store, config, stats })
    }
}
