//! Conditioning construction per variant and ablation set, plus the AddFC
//! baseline fusion.

use crate::diffusion::{Ablation, DiffusionError, ModelConfig, Variant};
use crate::nn::layers::GraphBuilder;
use crate::nn::params::ParamStore;
use crate::nn::tape::Var;
use crate::stepmark::{strip_steps, truncate_steps, StepMarkedText, TruncateMode};
use crate::textenc::{
    fine_coarse_cross_attention_graph, step_rows_graph, step_self_attention_graph, StepEmbedMode,
    TextEmbeddings, TokenEncoder,
};
use ndarray::Array2;

/// Whether the text pipeline runs for training or generation; input-level
/// step truncations apply only at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Inference,
}

/// One generation request.
#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub coarse: String,
    pub fine: Option<StepMarkedText>,
    pub frames: usize,
    pub seed: u64,
}

/// Conditioning nodes on a live graph.
pub struct CondVars {
    pub cond: Var,
    pub e_embed: Var,
    pub e_index: Option<usize>,
    pub truncated: bool,
}

/// AddFC baseline fusion: elementwise sum of the coarse tensor and every
/// step tensor. All matrices must share one shape (each text encoded to
/// the full context length).
pub fn addfc_fuse(
    coarse: &Array2<f64>,
    steps: &[Array2<f64>],
) -> Result<Array2<f64>, DiffusionError> {
    let mut out = coarse.clone();
    for s in steps {
        if s.dim() != coarse.dim() {
            return Err(DiffusionError::ShapeMismatch(format!(
                "step tensor {:?} vs coarse {:?}",
                s.dim(),
                coarse.dim()
            )));
        }
        out += s;
    }
    Ok(out)
}

fn apply_truncations(
    fine: &StepMarkedText,
    config: &ModelConfig,
    phase: Phase,
) -> Result<StepMarkedText, DiffusionError> {
    let mut out = fine.clone();
    if config.has(Ablation::DelFirstLast) {
        out = truncate_steps(&out, TruncateMode::DelFirstLast)?;
    }
    if config.has(Ablation::DelInner) {
        out = truncate_steps(&out, TruncateMode::DelInner)?;
    }
    if phase == Phase::Inference {
        if config.has(Ablation::DelFirstLastInput) {
            out = truncate_steps(&out, TruncateMode::DelFirstLast)?;
        }
        if config.has(Ablation::DelInnerInput) {
            out = truncate_steps(&out, TruncateMode::DelInner)?;
        }
    }
    Ok(out)
}

fn require_fine<'a>(
    req: &'a GenerationRequest,
    variant: Variant,
) -> Result<&'a StepMarkedText, DiffusionError> {
    req.fine.as_ref().ok_or_else(|| {
        DiffusionError::VariantInputMismatch(format!("variant {variant} needs a fine text"))
    })
}

/// Pads token rows with zero rows up to the encoder context length.
fn pad_to_context(g: &mut GraphBuilder<'_>, rows: Var, context: usize, d: usize) -> Var {
    let have = g.tape.value(rows).nrows();
    if have >= context {
        return g.tape.slice_rows(rows, 0, context);
    }
    let pad = g.c(Array2::zeros((context - have, d)));
    g.tape.concat_rows(&[rows, pad])
}

/// Builds the conditioning sequence on a live graph, dispatching on the
/// variant and ablation set.
pub fn build_cond_graph(
    g: &mut GraphBuilder<'_>,
    enc: &dyn TokenEncoder,
    req: &GenerationRequest,
    config: &ModelConfig,
    phase: Phase,
) -> Result<CondVars, DiffusionError> {
    if req.coarse.trim().is_empty() {
        return Err(DiffusionError::VariantInputMismatch("coarse text is empty".into()));
    }
    let step_mode = if config.has(Ablation::UseEPerStep) {
        StepEmbedMode::EndToken
    } else {
        StepEmbedMode::MeanTokens
    };
    match config.variant {
        Variant::FineMotionDiffuse => {
            let fine = apply_truncations(require_fine(req, config.variant)?, config, phase)?;
            let bodies = strip_steps(&fine);
            let raw = step_rows_graph(g, enc, &bodies, step_mode)?;
            let f_feas = step_self_attention_graph(g, raw, config.text_layers, config.heads)?;
            if config.has(Ablation::NoCrossAttention) {
                // Bypass: conditioning is the fine features themselves;
                // the diffusion-step embedding seeds from their mean.
                let e_embed = g.tape.mean_rows(f_feas);
                return Ok(CondVars { cond: f_feas, e_embed, e_index: None, truncated: false });
            }
            let (coarse_rows, meta) = enc.encode_on_graph(g, &req.coarse)?;
            let cond = fine_coarse_cross_attention_graph(
                g,
                f_feas,
                coarse_rows,
                config.cross_layers,
                config.heads,
            )?;
            let e_embed = g.tape.slice_rows(cond, meta.e_index, 1);
            Ok(CondVars { cond, e_embed, e_index: Some(meta.e_index), truncated: meta.truncated })
        }
        Variant::MotionDiffuseCoarse => {
            let (rows, meta) = enc.encode_on_graph(g, &req.coarse)?;
            let e_embed = g.tape.slice_rows(rows, meta.e_index, 1);
            Ok(CondVars {
                cond: rows,
                e_embed,
                e_index: Some(meta.e_index),
                truncated: meta.truncated,
            })
        }
        Variant::MotionDiffuseDetailed => {
            let fine = apply_truncations(require_fine(req, config.variant)?, config, phase)?;
            let joined = strip_steps(&fine).join(" ");
            let (rows, meta) = enc.encode_on_graph(g, &joined)?;
            let e_embed = g.tape.slice_rows(rows, meta.e_index, 1);
            Ok(CondVars {
                cond: rows,
                e_embed,
                e_index: Some(meta.e_index),
                truncated: meta.truncated,
            })
        }
        Variant::AddFc => {
            let fine = apply_truncations(require_fine(req, config.variant)?, config, phase)?;
            let context = config.max_tokens;
            let d = enc.d_model();
            let (coarse_rows, meta) = enc.encode_on_graph(g, &req.coarse)?;
            let mut fused = pad_to_context(g, coarse_rows, context, d);
            let mut truncated = meta.truncated;
            for body in strip_steps(&fine) {
                let (rows, m) = enc.encode_on_graph(g, &body)?;
                truncated |= m.truncated;
                let padded = pad_to_context(g, rows, context, d);
                fused = g.tape.add(fused, padded);
            }
            let e_embed = g.tape.slice_rows(fused, meta.e_index, 1);
            Ok(CondVars { cond: fused, e_embed, e_index: Some(meta.e_index), truncated })
        }
    }
}

/// Inference-path conditioning: runs a throwaway graph and extracts plain
/// matrices.
pub fn build_cond_values(
    store: &ParamStore,
    enc: &dyn TokenEncoder,
    req: &GenerationRequest,
    config: &ModelConfig,
    phase: Phase,
) -> Result<TextEmbeddings, DiffusionError> {
    let mut g = GraphBuilder::new(store);
    let cond = build_cond_graph(&mut g, enc, req, config, phase)?;
    Ok(TextEmbeddings {
        cond: g.tape.value(cond.cond).clone(),
        e_index: cond.e_index,
        e_embed: g.tape.value(cond.e_embed).clone(),
    })
}
