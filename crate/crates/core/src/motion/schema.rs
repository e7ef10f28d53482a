//! Feature-schema registry.
//!
//! A schema names the channel layout of a motion's feature vector and
//! carries the channel map mirroring needs: which channels flip sign
//! (lateral coordinates) and which channel pairs are exchanged (left/right
//! joint blocks). The built-in `stick5` schema derives its map from the
//! skeleton; other layouts register an explicit map and are otherwise
//! treated as opaque.

use super::Skeleton;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const STICK5_SCHEMA_ID: &str = "stick5";

/// Channel layout of one motion feature vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub id: String,
    pub dim: usize,
    pub skeleton: Skeleton,
    /// Channels whose sign flips under mirroring (lateral coordinates).
    pub mirror_sign_flip: Vec<usize>,
    /// Channel pairs exchanged under mirroring (left <-> right blocks).
    pub mirror_swap: Vec<(usize, usize)>,
}

impl FeatureSchema {
    /// Channel permutation + sign vector realizing the mirror transform:
    /// `mirrored[c] = sign[c] * original[perm[c]]`.
    pub fn mirror_map(&self) -> (Vec<usize>, Vec<f64>) {
        let mut perm: Vec<usize> = (0..self.dim).collect();
        for &(a, b) in &self.mirror_swap {
            perm.swap(a, b);
        }
        let mut sign = vec![1.0; self.dim];
        for &c in &self.mirror_sign_flip {
            sign[c] = -1.0;
        }
        (perm, sign)
    }
}

/// The default 5-joint stick figure: root, left arm, right arm, left leg,
/// right leg end-effectors. Channels: joint j occupies columns
/// `[3j, 3j+3)` as (x lateral, y vertical, z forward); column 15 is root
/// height. `D = 16`.
pub fn stick5_schema() -> FeatureSchema {
    let skeleton = Skeleton {
        joint_names: vec![
            "root".into(),
            "left_arm".into(),
            "right_arm".into(),
            "left_leg".into(),
            "right_leg".into(),
        ],
        parent_index: vec![None, Some(0), Some(0), Some(0), Some(0)],
        lr_pairs: vec![(1, 2), (3, 4)],
    };
    let dim = 16;
    // Lateral (x) channel of every joint flips sign.
    let mirror_sign_flip = (0..5).map(|j| 3 * j).collect();
    // lr pairs exchange whole xyz triples.
    let mut mirror_swap = Vec::new();
    for &(l, r) in &skeleton.lr_pairs {
        for k in 0..3 {
            mirror_swap.push((3 * l + k, 3 * r + k));
        }
    }
    FeatureSchema { id: STICK5_SCHEMA_ID.into(), dim, skeleton, mirror_sign_flip, mirror_swap }
}

/// Registry of known feature schemas, keyed by id.
#[derive(Debug, Clone)]
pub struct SchemaRegistry {
    schemas: BTreeMap<String, FeatureSchema>,
}

impl Default for SchemaRegistry {
    fn default() -> Self {
        let mut schemas = BTreeMap::new();
        let s = stick5_schema();
        schemas.insert(s.id.clone(), s);
        Self { schemas }
    }
}

impl SchemaRegistry {
    pub fn register(&mut self, schema: FeatureSchema) {
        self.schemas.insert(schema.id.clone(), schema);
    }

    pub fn get(&self, id: &str) -> Option<&FeatureSchema> {
        self.schemas.get(id)
    }
}

/// Column index helpers for the `stick5` layout.
pub mod stick5 {
    pub const ROOT: usize = 0;
    pub const LEFT_ARM: usize = 1;
    pub const RIGHT_ARM: usize = 2;
    pub const LEFT_LEG: usize = 3;
    pub const RIGHT_LEG: usize = 4;
    pub const ROOT_HEIGHT_COL: usize = 15;
    pub const DIM: usize = 16;

    pub fn x(joint: usize) -> usize {
        3 * joint
    }
    pub fn y(joint: usize) -> usize {
        3 * joint + 1
    }
    pub fn z(joint: usize) -> usize {
        3 * joint + 2
    }
}
