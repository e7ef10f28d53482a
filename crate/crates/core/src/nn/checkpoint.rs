//! Self-describing checkpoint container.
//!
//! Layout: magic `FMCK`, u32 version, u64 header length, UTF-8 JSON header
//! (`metadata` plus an ordered tensor directory of name/rows/cols), then
//! the concatenated little-endian f32 payload in directory order.

use super::params::ParamStore;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"FMCK";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("payload is {actual} bytes, directory implies {expected}")]
    PayloadLength { expected: usize, actual: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    metadata: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

pub fn save_checkpoint(
    path: &Path,
    store: &ParamStore,
    metadata: serde_json::Value,
) -> Result<(), CheckpointError> {
    let tensors: Vec<TensorEntry> = store
        .iter()
        .map(|(name, v)| TensorEntry { name: name.to_string(), rows: v.nrows(), cols: v.ncols() })
        .collect();
    let header = serde_json::to_vec(&Header { metadata, tensors })?;
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    file.write_all(&VERSION.to_le_bytes())?;
    file.write_all(&(header.len() as u64).to_le_bytes())?;
    file.write_all(&header)?;
    for (_, v) in store.iter() {
        for x in v.iter() {
            file.write_all(&(*x as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(ParamStore, serde_json::Value), CheckpointError> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let mut buf4 = [0u8; 4];
    file.read_exact(&mut buf4)?;
    let version = u32::from_le_bytes(buf4);
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let mut buf8 = [0u8; 8];
    file.read_exact(&mut buf8)?;
    let header_len = u64::from_le_bytes(buf8) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)?;

    let mut payload = Vec::new();
    file.read_to_end(&mut payload)?;
    let expected: usize = header.tensors.iter().map(|t| 4 * t.rows * t.cols).sum();
    if payload.len() != expected {
        return Err(CheckpointError::PayloadLength { expected, actual: payload.len() });
    }

    let mut store = ParamStore::new();
    let mut offset = 0usize;
    for entry in &header.tensors {
        let n = entry.rows * entry.cols;
        let mut values = Vec::with_capacity(n);
        for chunk in payload[offset..offset + 4 * n].chunks_exact(4) {
            values.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64);
        }
        offset += 4 * n;
        store.insert(
            &entry.name,
            Array2::from_shape_vec((entry.rows, entry.cols), values).expect("length checked"),
        );
    }
    Ok((store, header.metadata))
}
