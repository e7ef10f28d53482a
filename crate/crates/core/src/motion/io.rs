//! Motion files: a JSON sidecar next to a raw little-endian f32 binary,
//! row-major frames x features. The binary byte length must equal
//! `4 * F * D` or loading fails.

use super::{MotionError, MotionSequence, Skeleton};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionSidecar {
    pub fps: f64,
    pub dim: usize,
    pub frames: usize,
    pub schema_id: String,
    pub normalized: bool,
    pub skeleton: Skeleton,
}

fn bin_path(json_path: &Path) -> PathBuf {
    json_path.with_extension("bin")
}

/// Writes `<stem>.json` + `<stem>.bin`; `path` may point at either file.
pub fn save_motion(
    path: &Path,
    motion: &MotionSequence,
    skeleton: &Skeleton,
) -> Result<(), MotionError> {
    let json_path = path.with_extension("json");
    let sidecar = MotionSidecar {
        fps: motion.fps,
        dim: motion.dim(),
        frames: motion.frames(),
        schema_id: motion.schema_id.clone(),
        normalized: motion.normalized,
        skeleton: skeleton.clone(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;

    let mut bytes = Vec::with_capacity(4 * motion.frames() * motion.dim());
    for v in motion.features.iter() {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(bin_path(&json_path), bytes)?;
    Ok(())
}

/// Loads a motion from its sidecar path (or any sibling extension).
pub fn load_motion(path: &Path) -> Result<(MotionSequence, MotionSidecar), MotionError> {
    let json_path = path.with_extension("json");
    let sidecar: MotionSidecar = serde_json::from_str(&fs::read_to_string(&json_path)?)?;
    let bytes = fs::read(bin_path(&json_path))?;
    let expected = 4 * sidecar.frames * sidecar.dim;
    if bytes.len() != expected {
        return Err(MotionError::ByteLength { expected, actual: bytes.len() });
    }
    let mut values = Vec::with_capacity(sidecar.frames * sidecar.dim);
    for chunk in bytes.chunks_exact(4) {
        values.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64);
    }
    let features = Array2::from_shape_vec((sidecar.frames, sidecar.dim), values)
        .expect("length checked above");
    let mut motion = MotionSequence::new(features, sidecar.fps, &sidecar.schema_id)?;
    motion.normalized = sidecar.normalized;
    Ok((motion, sidecar))
}
