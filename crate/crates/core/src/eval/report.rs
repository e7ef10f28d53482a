//! Multi-run evaluation: generate one motion per test description, score
//! FID / R-precision / Diversity against the real set, and report
//! mean ± 95% CI over the runs.

use crate::dataset::{load_record_motion, CorpusRecord};
use crate::diffusion::{sample, GenerationRequest, TrainedModel};
use crate::eval::contrastive::ContrastiveModel;
use crate::eval::fid::fid;
use crate::eval::metrics::{diversity, r_precision, DEFAULT_NEGATIVES};
use crate::eval::{EvalError, EvalFeatures};
use crate::motion::normalize;
use crate::stepmark::strip_steps;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mean: f64,
    pub ci95: f64,
    pub runs: usize,
}

fn summarize(values: &[f64]) -> MetricReport {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let ci95 = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        1.96 * (var / n as f64).sqrt()
    };
    MetricReport { mean, ci95, runs: n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideReport {
    pub fid: MetricReport,
    pub r_precision_top1: MetricReport,
    pub r_precision_top2: MetricReport,
    pub diversity: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: String,
    pub real: SideReport,
    pub generated: SideReport,
    pub single_run: bool,
    pub fid_regularized: bool,
    pub n_descriptions: usize,
}

impl EvalReport {
    /// Text table mirroring the quantitative-results layout:
    /// FID (lower better), R-precision top-1/top-2 (higher better),
    /// Diversity (closer to real better).
    pub fn render_table(&self) -> String {
        let row = |name: &str, side: &SideReport| {
            format!(
                "{:<24} {:>8.3}±{:.3} {:>8.3}±{:.3} {:>8.3}±{:.3} {:>10.3}±{:.3}\n",
                name,
                side.fid.mean,
                side.fid.ci95,
                side.r_precision_top1.mean,
                side.r_precision_top1.ci95,
                side.r_precision_top2.mean,
                side.r_precision_top2.ci95,
                side.diversity.mean,
                side.diversity.ci95,
            )
        };
        let mut out = format!(
            "{:<24} {:>14} {:>14} {:>14} {:>16}\n",
            "Methods", "FID(v)", "R-prec Top1(^)", "Top2(^)", "Diversity(->)"
        );
        out.push_str(&row("Real motions", &self.real));
        out.push_str(&row(&self.variant, &self.generated));
        if self.single_run {
            out.push_str("(single run: CI reported as ±0)\n");
        }
        out
    }
}

/// Number of disjoint diversity pairs for a set of n features.
fn diversity_pairs(n: usize) -> usize {
    (n / 2).max(1)
}

fn eval_one_side(
    feats: &EvalFeatures,
    texts: &EvalFeatures,
    real_feats: &EvalFeatures,
    negatives: usize,
    seed: u64,
) -> Result<(f64, f64, f64, f64, bool), EvalError> {
    let f = fid(real_feats, feats)?;
    let accs = r_precision(texts, feats, &[1, 2], negatives, seed)?;
    let div = diversity(feats, diversity_pairs(feats.rows.nrows()), seed ^ 0x51)?;
    Ok((f.value, accs[0], accs[1], div, f.regularized))
}

/// Full evaluation: per run, generate one motion per test description
/// with a fresh seed, embed everything with the contrastive evaluator,
/// and score. `n_runs == 1` reports CI ±0 with the single-run flag.
pub fn evaluate_model(
    records: &[CorpusRecord],
    model: &TrainedModel,
    evaluator: &ContrastiveModel,
    n_runs: usize,
    base_seed: u64,
) -> Result<EvalReport, EvalError> {
    assert!(n_runs >= 1, "need at least one run");
    let negatives = DEFAULT_NEGATIVES.min(records.len().saturating_sub(1));
    if records.len() < 2 {
        return Err(EvalError::PoolTooSmall { have: records.len(), need: 2 });
    }
    let enc = model.encoder();

    // Real motions and texts are embedded once.
    let texts: Vec<String> =
        records.iter().map(|r| strip_steps(&r.fine).join(" ")).collect();
    let text_feats = evaluator.encode_texts(&texts);
    let mut real_norm: Vec<Array2<f64>> = Vec::with_capacity(records.len());
    let ids: Vec<String> = records.iter().map(|r| r.motion_id.clone()).collect();
    for record in records {
        let motion = load_record_motion(record).map_err(|e| EvalError::Inputs(e.to_string()))?;
        let normalized =
            normalize(&motion, &evaluator.stats).map_err(|e| EvalError::Inputs(e.to_string()))?;
        real_norm.push(normalized.features);
    }
    let real_feats = evaluator.encode_motions(&real_norm, &ids);

    let mut fid_runs = Vec::new();
    let mut top1_runs = Vec::new();
    let mut top2_runs = Vec::new();
    let mut div_runs = Vec::new();
    let mut regularized = false;
    for run in 0..n_runs {
        let mut gen_norm: Vec<Array2<f64>> = Vec::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            let req = GenerationRequest {
                coarse: record.coarse.clone(),
                fine: Some(record.fine.clone()),
                frames: real_norm[i].nrows(),
                seed: base_seed ^ (run as u64) << 32 ^ i as u64,
            };
            let motion =
                sample(&req, &model.config, &model.store, enc.as_ref(), &model.stats, &model.schema_id)
                    .map_err(|e| EvalError::Inputs(e.to_string()))?;
            let normalized = normalize(&motion, &evaluator.stats)
                .map_err(|e| EvalError::Inputs(e.to_string()))?;
            gen_norm.push(normalized.features);
        }
        let gen_feats = evaluator.encode_motions(&gen_norm, &ids);
        let (f, t1, t2, d, reg) =
            eval_one_side(&gen_feats, &text_feats, &real_feats, negatives, base_seed + run as u64)?;
        regularized |= reg;
        fid_runs.push(f);
        top1_runs.push(t1);
        top2_runs.push(t2);
        div_runs.push(d);
    }

    // Real-side reference row (identical per run; evaluated once).
    let (rf, rt1, rt2, rd, _) =
        eval_one_side(&real_feats, &text_feats, &real_feats, negatives, base_seed)?;
    let real = SideReport {
        fid: MetricReport { mean: rf, ci95: 0.0, runs: 1 },
        r_precision_top1: MetricReport { mean: rt1, ci95: 0.0, runs: 1 },
        r_precision_top2: MetricReport { mean: rt2, ci95: 0.0, runs: 1 },
        diversity: MetricReport { mean: rd, ci95: 0.0, runs: 1 },
    };
    Ok(EvalReport {
        variant: model.config.variant.to_string(),
        real,
        generated: SideReport {
            fid: summarize(&fid_runs),
            r_precision_top1: summarize(&top1_runs),
            r_precision_top2: summarize(&top2_runs),
            diversity: summarize(&div_runs),
        },
        single_run: n_runs == 1,
        fid_regularized: regularized,
        n_descriptions: records.len(),
    })
}

/// FID of pure-noise motions against the given real features: the
/// reference level a trained model must beat.
pub fn noise_floor_fid(
    real_feats: &EvalFeatures,
    evaluator: &ContrastiveModel,
    frames: usize,
    motion_dim: usize,
    count: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<Array2<f64>> = Vec::with_capacity(count);
    for _ in 0..count {
        noise.push(Array2::from_shape_fn((frames, motion_dim), |_| {
            StandardNormal.sample(&mut rng)
        }));
    }
    let ids: Vec<String> = (0..count).map(|i| format!("noise_{i}")).collect();
    let noise_feats = evaluator.encode_motions(&noise, &ids);
    Ok(fid(real_feats, &noise_feats)?.value)
}
