//! Denoiser network and parameter registration.

use crate::diffusion::cond::CondVars;
use crate::diffusion::{DiffusionError, EncoderProfile, ModelConfig};
use crate::nn::layers::{
    init_denoiser_layer, init_linear, init_linear_zero, GraphBuilder,
};
use crate::nn::params::ParamStore;
use crate::nn::tape::Var;
use crate::textenc::{
    diffusion_step_embedding_graph, init_cross_attention_params, init_step_attention_params,
    init_timestep_params, positional_encoding, HashStubEncoder, TableEncoder, TextEmbeddings,
    TokenEncoder,
};
use ndarray::Array2;

pub const DENOISER_IN: &str = "den.in";
pub const DENOISER_OUT: &str = "den.out";
pub const ENCODER_PREFIX: &str = "tok.";

/// Builds the configured token-encoder profile.
pub fn make_encoder(config: &ModelConfig) -> Box<dyn TokenEncoder> {
    match config.encoder {
        EncoderProfile::HashStub => {
            Box::new(HashStubEncoder::new(config.d_model, config.max_tokens))
        }
        EncoderProfile::Toy { buckets } => {
            Box::new(TableEncoder::toy(config.d_model, config.max_tokens, buckets))
        }
    }
}

/// Registers every parameter of the full model and returns the encoder.
pub fn init_model_params(store: &mut ParamStore, config: &ModelConfig) -> Box<dyn TokenEncoder> {
    let enc = make_encoder(config);
    enc.init_params(store, config.seed);
    let d = config.d_model;
    let hidden = config.ffn_hidden;
    init_step_attention_params(store, d, hidden, config.text_layers, config.seed);
    init_cross_attention_params(store, d, hidden, config.cross_layers, config.seed);
    init_timestep_params(store, d, config.seed);
    init_linear(store, DENOISER_IN, config.motion_dim, d, config.seed);
    for l in 0..config.denoiser_layers {
        init_denoiser_layer(store, &format!("den.l{l}"), d, hidden, config.seed);
    }
    crate::nn::layers::init_layer_norm(store, "den.final", d, config.seed);
    init_linear_zero(store, DENOISER_OUT, d, config.motion_dim, config.seed);
    enc
}

/// Denoiser forward: motion frames as tokens, frame position encodings,
/// the diffusion-step embedding broadcast over frames, then the layer
/// stack with cross-attention to the conditioning sequence. Output shape
/// equals input shape (epsilon prediction).
pub fn denoise_graph(
    g: &mut GraphBuilder<'_>,
    x_t: Var,
    t: usize,
    cond: &CondVars,
    config: &ModelConfig,
) -> Result<Var, DiffusionError> {
    let (frames, dim) = g.tape.value(x_t).dim();
    if dim != config.motion_dim {
        return Err(DiffusionError::ShapeMismatch(format!(
            "x_t has {dim} channels, model expects {}",
            config.motion_dim
        )));
    }
    let mut h = g.linear(x_t, DENOISER_IN);
    let pe = g.c(positional_encoding(frames, config.d_model)?);
    h = g.tape.add(h, pe);
    let step_emb = diffusion_step_embedding_graph(g, cond.e_embed, t, config.timesteps)?;
    h = g.tape.add_row(h, step_emb);
    for l in 0..config.denoiser_layers {
        h = g.denoiser_layer(h, cond.cond, step_emb, &format!("den.l{l}"), config.heads);
    }
    let hn = g.layer_norm(h, "den.final");
    Ok(g.linear(hn, DENOISER_OUT))
}

/// Inference denoiser: plain matrices in, plain matrices out. The
/// conditioning is treated as constant (it does not depend on `t`, so
/// callers compute it once per request).
pub fn denoise_values(
    store: &ParamStore,
    x_t: &Array2<f64>,
    t: usize,
    emb: &TextEmbeddings,
    config: &ModelConfig,
) -> Result<Array2<f64>, DiffusionError> {
    let mut g = GraphBuilder::new(store);
    let x = g.c(x_t.clone());
    let cond = CondVars {
        cond: g.c(emb.cond.clone()),
        e_embed: g.c(emb.e_embed.clone()),
        e_index: emb.e_index,
        truncated: false,
    };
    let out = denoise_graph(&mut g, x, t, &cond, config)?;
    Ok(g.tape.value(out).clone())
}

/// A trained diffusion model bundle: parameters, the exact config
/// snapshot, the normalization stats, and the motion schema id. The
/// checkpoint embeds everything needed for an exact rerun.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub store: ParamStore,
    pub config: ModelConfig,
    pub stats: crate::motion::NormStats,
    pub schema_id: String,
}

impl TrainedModel {
    pub fn encoder(&self) -> Box<dyn TokenEncoder> {
        make_encoder(&self.config)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), crate::nn::CheckpointError> {
        let metadata = serde_json::json!({
            "kind": "diffusion_model",
            "config": self.config,
            "norm_stats": self.stats,
            "schema_id": self.schema_id,
            "encoder_profile": self.config.encoder,
        });
        crate::nn::save_checkpoint(path, &self.store, metadata)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, crate::nn::CheckpointError> {
        let (store, metadata) = crate::nn::load_checkpoint(path)?;
        let config: ModelConfig = serde_json::from_value(metadata["config"].clone())?;
        let stats: crate::motion::NormStats =
            serde_json::from_value(metadata["norm_stats"].clone())?;
        let schema_id = metadata["schema_id"].as_str().unwrap_or("stick5").to_string();
        Ok(Self { store, config, stats, schema_id })
    }
}
