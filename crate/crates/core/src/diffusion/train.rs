//! One optimization step of the diffusion objective.

use crate::diffusion::cond::{build_cond_graph, GenerationRequest, Phase};
use crate::diffusion::model::{denoise_graph, ENCODER_PREFIX};
use crate::diffusion::schedule::{q_sample, NoiseSchedule};
use crate::diffusion::{Ablation, DiffusionError, ModelConfig};
use crate::nn::layers::GraphBuilder;
use crate::nn::params::{Adam, ParamStore};
use crate::stepmark::StepMarkedText;
use crate::textenc::TokenEncoder;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// One training example: a normalized motion with its paired texts.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub motion_norm: Array2<f64>,
    pub coarse: String,
    pub fine: Option<StepMarkedText>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainBatch {
    pub items: Vec<TrainItem>,
}

pub fn randn(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(rng))
}

/// A fixed corruption draw for one batch item.
#[derive(Debug, Clone)]
pub struct NoiseDraw {
    pub t: usize,
    pub eps: Array2<f64>,
}

/// Batch loss with fixed draws, plus the parameter gradients. Exposed so
/// gradient checks can evaluate the exact same objective the optimizer
/// sees.
pub fn batch_loss_and_grads(
    batch: &TrainBatch,
    draws: &[NoiseDraw],
    config: &ModelConfig,
    sched: &NoiseSchedule,
    store: &ParamStore,
    enc: &dyn TokenEncoder,
) -> Result<(f64, std::collections::BTreeMap<String, Array2<f64>>), DiffusionError> {
    assert_eq!(batch.items.len(), draws.len(), "one draw per batch item");
    let mut g = GraphBuilder::new(store);
    if !config.has(Ablation::ClipUnfrozen) {
        g.freeze_prefix(ENCODER_PREFIX);
    }
    let mut losses = Vec::with_capacity(batch.items.len());
    for (item, draw) in batch.items.iter().zip(draws) {
        let frames = item.motion_norm.nrows();
        let x_t = q_sample(&item.motion_norm, draw.t, &draw.eps, sched)?;
        let x_var = g.c(x_t);
        let req = GenerationRequest {
            coarse: item.coarse.clone(),
            fine: item.fine.clone(),
            frames,
            seed: 0,
        };
        let cond = build_cond_graph(&mut g, enc, &req, config, Phase::Train)?;
        let eps_hat = denoise_graph(&mut g, x_var, draw.t, &cond, config)?;
        losses.push(g.tape.mse_loss(eps_hat, &draw.eps));
    }
    let mut total = losses[0];
    for loss in &losses[1..] {
        total = g.tape.add(total, *loss);
    }
    let mean = g.tape.scale(total, 1.0 / losses.len() as f64);
    let loss_value = g.tape.value(mean)[(0, 0)];
    if !loss_value.is_finite() {
        return Err(DiffusionError::NonFiniteLoss(loss_value));
    }
    let grads = g.tape.backward(mean);
    Ok((loss_value, g.tape.param_grads(&grads)))
}

/// Epsilon-prediction MSE over the batch, one Adam update. The token
/// encoder stays frozen unless the `clip_unfrozen` ablation is active.
pub fn training_step(
    batch: &TrainBatch,
    config: &ModelConfig,
    sched: &NoiseSchedule,
    store: &mut ParamStore,
    adam: &mut Adam,
    enc: &dyn TokenEncoder,
    rng: &mut ChaCha8Rng,
) -> Result<f64, DiffusionError> {
    assert!(!batch.items.is_empty(), "empty batch");
    let draws: Vec<NoiseDraw> = batch
        .items
        .iter()
        .map(|item| NoiseDraw {
            t: rng.gen_range(0..config.timesteps),
            eps: randn(rng, item.motion_norm.nrows(), item.motion_norm.ncols()),
        })
        .collect();
    let (loss_value, grads) = batch_loss_and_grads(batch, &draws, config, sched, store, enc)?;
    adam.step(store, &grads);
    Ok(loss_value)
}
