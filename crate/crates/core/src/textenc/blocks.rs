//! Step embeddings, attention stacks, and the diffusion-step embedding.

use crate::nn::layers::{init_encoder_layer, init_linear, GraphBuilder};
use crate::nn::params::ParamStore;
use crate::nn::tape::Var;
use crate::stepmark::{strip_steps, StepMarkedText};
use crate::textenc::encoder::TokenEncoder;
use crate::textenc::{FineFeatures, TextEncodeError};
use ndarray::Array2;

/// Sinusoidal position table: `PE[p, 2i] = sin(p / 10000^(2i/d))`,
/// `PE[p, 2i+1] = cos(p / 10000^(2i/d))`.
pub fn positional_encoding(n: usize, d: usize) -> Result<Array2<f64>, TextEncodeError> {
    if d % 2 != 0 {
        return Err(TextEncodeError::OddDimension(d));
    }
    let mut pe = Array2::zeros((n, d));
    for p in 0..n {
        for i in 0..d / 2 {
            let rate = 1.0 / 10000f64.powf(2.0 * i as f64 / d as f64);
            pe[(p, 2 * i)] = (p as f64 * rate).sin();
            pe[(p, 2 * i + 1)] = (p as f64 * rate).cos();
        }
    }
    Ok(pe)
}

/// Sinusoidal embedding of the diffusion sequence number `t`.
pub fn timestep_row(t: usize, total: usize, d: usize) -> Result<Array2<f64>, TextEncodeError> {
    if t >= total {
        return Err(TextEncodeError::TOutOfRange { t, total });
    }
    let table = positional_encoding(t + 1, d)?;
    Ok(table.row(t).to_owned().insert_axis(ndarray::Axis(0)))
}

/// One step embedding: the arithmetic mean over the encoder's actual token
/// rows (the encoder never returns padding rows).
pub fn encode_step(
    step_text: &str,
    enc: &dyn TokenEncoder,
    store: &ParamStore,
) -> Result<Array2<f64>, TextEncodeError> {
    if step_text.trim().is_empty() {
        return Err(TextEncodeError::EmptyStep);
    }
    let encoding = enc.encode(store, step_text)?;
    let d = encoding.rows.ncols();
    let n = encoding.rows.nrows() as f64;
    let mut mean = Array2::zeros((1, d));
    for row in encoding.rows.rows() {
        for (c, v) in row.iter().enumerate() {
            mean[(0, c)] += v / n;
        }
    }
    Ok(mean)
}

/// Raw step matrix: row k is [`encode_step`] of step k. Per-step encoding
/// means no step is ever lost to the encoder's context limit.
pub fn encode_fine(
    text: &StepMarkedText,
    enc: &dyn TokenEncoder,
    store: &ParamStore,
) -> Result<FineFeatures, TextEncodeError> {
    let bodies = strip_steps(text);
    let d = enc.d_model();
    let mut rows = Array2::zeros((bodies.len(), d));
    for (k, body) in bodies.iter().enumerate() {
        let emb = encode_step(body, enc, store)?;
        rows.row_mut(k).assign(&emb.row(0));
    }
    Ok(FineFeatures { rows })
}

/// How one step becomes one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepEmbedMode {
    /// Mean over all token rows.
    MeanTokens,
    /// The `[E]` token row of that step's encoding.
    EndToken,
}

/// Tape version of the raw step matrix (n x d), one row per step body.
pub fn step_rows_graph(
    g: &mut GraphBuilder<'_>,
    enc: &dyn TokenEncoder,
    bodies: &[String],
    mode: StepEmbedMode,
) -> Result<Var, TextEncodeError> {
    assert!(!bodies.is_empty(), "at least one step required");
    let mut rows = Vec::with_capacity(bodies.len());
    for body in bodies {
        if body.trim().is_empty() {
            return Err(TextEncodeError::EmptyStep);
        }
        let (tokens, meta) = enc.encode_on_graph(g, body)?;
        let row = match mode {
            StepEmbedMode::MeanTokens => g.tape.mean_rows(tokens),
            StepEmbedMode::EndToken => g.tape.slice_rows(tokens, meta.e_index, 1),
        };
        rows.push(row);
    }
    Ok(g.tape.concat_rows(&rows))
}

pub const STEP_ATT_PREFIX: &str = "fine_sa";
pub const CROSS_ATT_PREFIX: &str = "cross";
pub const TIMESTEP_PREFIX: &str = "tstep.proj";

pub fn init_step_attention_params(
    store: &mut ParamStore,
    d: usize,
    hidden: usize,
    layers: usize,
    seed: u64,
) {
    for l in 0..layers {
        init_encoder_layer(store, &format!("{STEP_ATT_PREFIX}.l{l}"), d, hidden, seed);
    }
    crate::nn::layers::init_layer_norm(store, &format!("{STEP_ATT_PREFIX}.final"), d, seed);
}

pub fn init_cross_attention_params(
    store: &mut ParamStore,
    d: usize,
    hidden: usize,
    layers: usize,
    seed: u64,
) {
    for l in 0..layers {
        init_encoder_layer(store, &format!("{CROSS_ATT_PREFIX}.l{l}"), d, hidden, seed);
    }
    crate::nn::layers::init_layer_norm(store, &format!("{CROSS_ATT_PREFIX}.final"), d, seed);
}

pub fn init_timestep_params(store: &mut ParamStore, d: usize, seed: u64) {
    init_linear(store, TIMESTEP_PREFIX, d, d, seed);
}

/// Step-aware self-attention: add hard positional encodings to the raw
/// step rows, then run the encoder-layer stack.
pub fn step_self_attention_graph(
    g: &mut GraphBuilder<'_>,
    raw_steps: Var,
    layers: usize,
    heads: usize,
) -> Result<Var, TextEncodeError> {
    let (n, d) = g.tape.value(raw_steps).dim();
    let pe = g.c(positional_encoding(n, d)?);
    let mut x = g.tape.add(raw_steps, pe);
    for l in 0..layers {
        x = g.encoder_layer(x, &format!("{STEP_ATT_PREFIX}.l{l}"), heads);
    }
    Ok(g.layer_norm(x, &format!("{STEP_ATT_PREFIX}.final")))
}

/// Fine-coarse cross-attention: coarse rows are the queries so the output
/// lives on coarse positions (the `[E]` position is needed downstream);
/// fine step rows are keys/values. Each layer is cross-attention followed
/// by an FFN.
pub fn fine_coarse_cross_attention_graph(
    g: &mut GraphBuilder<'_>,
    fine: Var,
    coarse: Var,
    layers: usize,
    heads: usize,
) -> Result<Var, TextEncodeError> {
    let dq = g.tape.value(coarse).ncols();
    let dk = g.tape.value(fine).ncols();
    if dq != dk {
        return Err(TextEncodeError::ShapeMismatch(format!(
            "coarse width {dq} != fine width {dk}"
        )));
    }
    let mut x = coarse;
    for l in 0..layers {
        x = g.cross_layer(x, fine, &format!("{CROSS_ATT_PREFIX}.l{l}"), heads);
    }
    Ok(g.layer_norm(x, &format!("{CROSS_ATT_PREFIX}.final")))
}

/// Diffusion-step embedding: `e_embed` plus the sinusoidal embedding of
/// `t`, through a learned linear map.
pub fn diffusion_step_embedding_graph(
    g: &mut GraphBuilder<'_>,
    e_embed: Var,
    t: usize,
    total: usize,
) -> Result<Var, TextEncodeError> {
    let (rows, d) = g.tape.value(e_embed).dim();
    if rows != 1 {
        return Err(TextEncodeError::ShapeMismatch(format!(
            "e_embed must be a single row, got {rows}"
        )));
    }
    let trow = g.c(timestep_row(t, total, d)?);
    let sum = g.tape.add(e_embed, trow);
    Ok(g.linear(sum, TIMESTEP_PREFIX))
}
