//! Ancestral DDPM sampling.

use crate::diffusion::cond::{build_cond_values, GenerationRequest, Phase};
use crate::diffusion::model::denoise_values;
use crate::diffusion::train::randn;
use crate::diffusion::{DiffusionError, ModelConfig};
use crate::motion::{denormalize, MotionSequence, NormStats, DEFAULT_FPS};
use crate::nn::params::ParamStore;
use crate::textenc::TokenEncoder;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Clamp range for the implied clean sample, in normalized units.
/// Imperfect epsilon predictions compound through the reverse chain; the
/// standard remedy is clamping the implied x0 each step before forming
/// the posterior mean.
pub const X0_CLAMP: f64 = 6.0;

/// Draws a motion from pure noise through the full reverse chain. The
/// conditioning is computed once (it does not depend on `t`); the result
/// is a pure function of (params, request, seed) and is returned
/// denormalized.
pub fn sample(
    req: &GenerationRequest,
    config: &ModelConfig,
    store: &ParamStore,
    enc: &dyn TokenEncoder,
    stats: &NormStats,
    schema_id: &str,
) -> Result<MotionSequence, DiffusionError> {
    assert!(req.frames >= 1, "target frame count must be positive");
    let sched = config.schedule()?;
    let emb = build_cond_values(store, enc, req, config, Phase::Inference)?;
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let mut x = randn(&mut rng, req.frames, config.motion_dim);
    for t in (0..config.timesteps).rev() {
        let eps_hat = denoise_values(store, &x, t, &emb, config)?;
        let noise = (t > 0).then(|| randn(&mut rng, req.frames, config.motion_dim));
        x = reverse_step(&x, &eps_hat, t, &sched, noise.as_ref());
    }
    let mut motion = MotionSequence::new(x, DEFAULT_FPS, schema_id)?;
    motion.normalized = true;
    Ok(denormalize(&motion, stats)?)
}

/// One ancestral reverse step: implied clean sample (clamped), exact
/// posterior mean `q(x_{t-1} | x_t, x0)`, plus `sqrt(beta_t)`-scaled noise
/// when given.
pub fn reverse_step(
    x: &ndarray::Array2<f64>,
    eps_hat: &ndarray::Array2<f64>,
    t: usize,
    sched: &crate::diffusion::NoiseSchedule,
    noise: Option<&ndarray::Array2<f64>>,
) -> ndarray::Array2<f64> {
    let beta = sched.beta[t];
    let alpha = sched.alpha[t];
    let ab = sched.alpha_bar[t];
    let ab_prev = if t > 0 { sched.alpha_bar[t - 1] } else { 1.0 };
    let x0_hat = ((x - &(eps_hat * (1.0 - ab).sqrt())) / ab.sqrt())
        .mapv(|v| v.clamp(-X0_CLAMP, X0_CLAMP));
    let mean = x0_hat * (ab_prev.sqrt() * beta / (1.0 - ab))
        + x * (alpha.sqrt() * (1.0 - ab_prev) / (1.0 - ab));
    match noise {
        Some(z) => mean + z * beta.sqrt(),
        None => mean,
    }
}
