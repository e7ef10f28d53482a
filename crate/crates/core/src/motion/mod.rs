//! Motion data model: frame-feature sequences, skeleton definition,
//! normalization, and left-right mirroring augmentation.
//!
//! A motion is an `F x D` matrix of per-frame features. The default
//! desk-scale layout (`stick5`) is a 5-joint stick figure — root, two arm
//! end-effectors, two leg end-effectors — with per-joint XYZ positions plus
//! a root-height channel (`D = 16`). Larger layouts (e.g. a 263-channel
//! profile) are carried as opaque pass-through schemas whose mirroring
//! channel map comes from the schema registry, not from code.

mod io;
mod mirror;
pub mod schema;

pub use io::{load_motion, save_motion, MotionSidecar};
pub use mirror::{mirror_motion, swap_lr_words};
pub use schema::{stick5_schema, FeatureSchema, SchemaRegistry, STICK5_SCHEMA_ID};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("feature dimension mismatch: motion has {motion}, stats have {stats}")]
    DimensionMismatch { motion: usize, stats: usize },
    #[error("motion is already normalized")]
    AlreadyNormalized,
    #[error("motion is not normalized")]
    NotNormalized,
    #[error("unknown feature schema `{0}`")]
    UnknownSchema(String),
    #[error("motion has no frames")]
    EmptyMotion,
    #[error("non-finite feature value at frame {frame}, channel {channel}")]
    NonFinite { frame: usize, channel: usize },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
    #[error("binary payload is {actual} bytes, sidecar implies {expected} (4*F*D)")]
    ByteLength { expected: usize, actual: usize },
}

/// Joint tree plus the left/right pairing used by mirroring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub joint_names: Vec<String>,
    /// Parent joint index per joint; `None` for the root (index 0).
    pub parent_index: Vec<Option<usize>>,
    /// Index pairs (left joint, right joint) exchanged under mirroring.
    pub lr_pairs: Vec<(usize, usize)>,
}

impl Skeleton {
    /// Validates the tree and pairing invariants.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.joint_names.len();
        if n == 0 {
            return Err("skeleton has no joints".into());
        }
        if self.parent_index.len() != n {
            return Err("parent_index length differs from joint count".into());
        }
        if self.parent_index[0].is_some() {
            return Err("joint 0 must be the root".into());
        }
        for (j, p) in self.parent_index.iter().enumerate().skip(1) {
            match p {
                None => return Err(format!("joint {j} has no parent but is not the root")),
                Some(p) if *p >= n => return Err(format!("joint {j} parent out of range")),
                Some(p) if *p == j => return Err(format!("joint {j} is its own parent")),
                _ => {}
            }
        }
        // Every non-root joint must reach the root without cycles.
        for j in 1..n {
            let mut cur = j;
            let mut hops = 0;
            while let Some(p) = self.parent_index[cur] {
                cur = p;
                hops += 1;
                if hops > n {
                    return Err(format!("cycle in parent chain of joint {j}"));
                }
            }
            if cur != 0 {
                return Err(format!("joint {j} does not reach the root"));
            }
        }
        let mut seen = vec![false; n];
        for &(l, r) in &self.lr_pairs {
            if l >= n || r >= n || l == r {
                return Err(format!("bad lr pair ({l}, {r})"));
            }
            for idx in [l, r] {
                if seen[idx] {
                    return Err(format!("joint {idx} appears in more than one lr pair"));
                }
                seen[idx] = true;
            }
        }
        Ok(())
    }
}

/// Per-channel mean/std for normalization. Std entries are clamped to
/// [`NormStats::STD_FLOOR`] so constant channels never divide by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub const STD_FLOOR: f64 = 1e-8;

    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Self {
        let std = std
            .into_iter()
            .map(|s| if s < Self::STD_FLOOR { Self::STD_FLOOR } else { s })
            .collect();
        Self { mean, std }
    }

    /// Per-channel statistics over all frames of all given motions.
    pub fn from_motions<'a>(motions: impl IntoIterator<Item = &'a MotionSequence>) -> Self {
        let mut mean: Vec<f64> = Vec::new();
        let mut m2: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for m in motions {
            let d = m.dim();
            if mean.is_empty() {
                mean = vec![0.0; d];
                m2 = vec![0.0; d];
            }
            for row in m.features.rows() {
                count += 1;
                for (c, &v) in row.iter().enumerate() {
                    let delta = v - mean[c];
                    mean[c] += delta / count as f64;
                    m2[c] += delta * (v - mean[c]);
                }
            }
        }
        let std = m2
            .iter()
            .map(|&s| if count > 1 { (s / (count - 1) as f64).sqrt() } else { 0.0 })
            .collect();
        Self::new(mean, std)
    }
}

/// An `F x D` motion clip with bookkeeping for normalization state.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub features: Array2<f64>,
    pub fps: f64,
    pub normalized: bool,
    pub schema_id: String,
}

pub const DEFAULT_FPS: f64 = 20.0;

impl MotionSequence {
    pub fn new(features: Array2<f64>, fps: f64, schema_id: &str) -> Result<Self, MotionError> {
        if features.nrows() == 0 {
            return Err(MotionError::EmptyMotion);
        }
        for ((f, c), v) in features.indexed_iter() {
            if !v.is_finite() {
                return Err(MotionError::NonFinite { frame: f, channel: c });
            }
        }
        Ok(Self { features, fps, normalized: false, schema_id: schema_id.to_string() })
    }

    pub fn frames(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// `(x - mean) / std` per channel; fails if already normalized.
pub fn normalize(m: &MotionSequence, stats: &NormStats) -> Result<MotionSequence, MotionError> {
    if m.normalized {
        return Err(MotionError::AlreadyNormalized);
    }
    if stats.mean.len() != m.dim() || stats.std.len() != m.dim() {
        return Err(MotionError::DimensionMismatch { motion: m.dim(), stats: stats.mean.len() });
    }
    let mut out = m.clone();
    for mut row in out.features.rows_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (*v - stats.mean[c]) / stats.std[c];
        }
    }
    out.normalized = true;
    Ok(out)
}

/// Exact algebraic inverse of [`normalize`].
pub fn denormalize(m: &MotionSequence, stats: &NormStats) -> Result<MotionSequence, MotionError> {
    if !m.normalized {
        return Err(MotionError::NotNormalized);
    }
    if stats.mean.len() != m.dim() || stats.std.len() != m.dim() {
        return Err(MotionError::DimensionMismatch { motion: m.dim(), stats: stats.mean.len() });
    }
    let mut out = m.clone();
    for mut row in out.features.rows_mut() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = *v * stats.std[c] + stats.mean[c];
        }
    }
    out.normalized = false;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(features: Array2<f64>) -> MotionSequence {
        MotionSequence::new(features, DEFAULT_FPS, STICK5_SCHEMA_ID).unwrap()
    }

    #[test]
    fn normalize_of_mean_is_zero() {
        let stats = NormStats::new(vec![1.0, 2.0, 3.0], vec![0.5, 1.0, 2.0]);
        let m = toy(arr2(&[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]));
        let out = normalize(&m, &stats).unwrap();
        assert!(out.features.iter().all(|&v| v == 0.0));
        assert!(out.normalized);
    }

    #[test]
    fn identity_stats_are_identity() {
        let stats = NormStats::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let m = toy(arr2(&[[0.25, -3.5], [7.0, 0.0]]));
        let out = normalize(&m, &stats).unwrap();
        assert_eq!(out.features, m.features);
    }

    #[test]
    fn denormalize_of_zero_broadcasts_mean() {
        let stats = NormStats::new(vec![4.0, -1.0], vec![2.0, 3.0]);
        let mut m = toy(arr2(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]));
        m.normalized = true;
        let out = denormalize(&m, &stats).unwrap();
        for row in out.features.rows() {
            assert_eq!(row.to_vec(), vec![4.0, -1.0]);
        }
    }

    #[test]
    fn round_trip_identity_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = rng.gen_range(1..8);
            let d = rng.gen_range(1..10);
            let m = toy(Array2::from_shape_fn((f, d), |_| rng.gen_range(-5.0..5.0)));
            let mean: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let std: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..3.0)).collect();
            let stats = NormStats::new(mean, std);
            let back = denormalize(&normalize(&m, &stats).unwrap(), &stats).unwrap();
            for (a, b) in m.features.iter().zip(back.features.iter()) {
                let rel = (a - b).abs() / a.abs().max(1.0);
                assert!(rel < 1e-6, "round trip error {rel}");
            }
        }
    }

    #[test]
    fn clamped_std_floor_still_round_trips() {
        let stats = NormStats::new(vec![1.0, 2.0], vec![0.0, 1e-12]);
        assert!(stats.std.iter().all(|&s| s == NormStats::STD_FLOOR));
        let m = toy(arr2(&[[1.0, 2.0], [1.0, 2.0]]));
        let back = denormalize(&normalize(&m, &stats).unwrap(), &stats).unwrap();
        for (a, b) in m.features.iter().zip(back.features.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn double_normalize_rejected() {
        let stats = NormStats::new(vec![0.0], vec![1.0]);
        let m = toy(arr2(&[[1.0]]));
        let n = normalize(&m, &stats).unwrap();
        assert!(matches!(normalize(&n, &stats), Err(MotionError::AlreadyNormalized)));
        assert!(matches!(denormalize(&m, &stats), Err(MotionError::NotNormalized)));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let stats = NormStats::new(vec![0.0; 4], vec![1.0; 4]);
        let m = toy(arr2(&[[1.0, 2.0]]));
        assert!(matches!(normalize(&m, &stats), Err(MotionError::DimensionMismatch { .. })));
    }

    #[test]
    fn skeleton_validation_catches_bad_trees() {
        let sk = stick5_schema().skeleton.clone();
        sk.validate().unwrap();

        let mut cyclic = sk.clone();
        cyclic.parent_index[1] = Some(2);
        cyclic.parent_index[2] = Some(1);
        assert!(cyclic.validate().is_err());

        let mut dup = sk;
        dup.lr_pairs.push((1, 3));
        assert!(dup.validate().is_err());
    }

    #[test]
    fn stats_from_motions_match_hand_count() {
        let m = toy(arr2(&[[1.0, 10.0], [3.0, 10.0]]));
        let stats = NormStats::from_motions([&m]);
        assert!((stats.mean[0] - 2.0).abs() < 1e-12);
        assert!((stats.std[0] - (2.0f64).sqrt()).abs() < 1e-12);
        // Constant channel is floored, not zero.
        assert_eq!(stats.std[1], NormStats::STD_FLOOR);
    }
}
