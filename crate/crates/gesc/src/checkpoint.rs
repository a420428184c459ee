//! Versioned parameter checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8 | magic `GESCCKPT` |
//! | 4 | `u32` format version |
//! | 4 + n | `u32` length, then JSON metadata (model config, input width, classes, edges) |
//! | 4 | `u32` tensor count |
//! | per tensor | `u32` name length, UTF-8 name, `u32` rank, `rank × u64` dims |
//! | rest | every tensor's values as `f64`, in table order |

use std::fs;
use std::path::Path;

use gesc_core::model::ModelParams;
use gesc_core::rng::rng_for;
use gesc_core::ModelConfig;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, IoResult};

pub const MAGIC: &[u8; 8] = b"GESCCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    pub in_dim: usize,
    pub num_classes: usize,
    pub num_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<u64>,
}

fn shape_of(name: &str, len: usize, p: &ModelParams) -> Vec<u64> {
    let d = p.hidden_dim() as u64;
    if name.starts_with("lift.") {
        vec![p.in_dim as u64, d]
    } else if name == "classifier.weight" {
        vec![2 * d, p.num_classes as u64]
    } else if [".w.re", ".w.im", ".q.re", ".q.im"].iter().any(|s| name.ends_with(s)) {
        vec![d, d]
    } else {
        vec![len as u64]
    }
}

/// Serializes `params` to bytes.
pub fn encode(params: &ModelParams) -> Vec<u8> {
    let num_edges = params.layers.first().map_or(0, |l| l.theta.len());
    let meta = CheckpointMeta {
        config: params.config.clone(),
        in_dim: params.in_dim,
        num_classes: params.num_classes,
        num_edges,
    };
    let meta = serde_json::to_vec(&meta).expect("metadata serializes");
    let tensors = params.tensors();

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        let shape = shape_of(&t.name, t.data.len(), params);
        out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for s in shape {
            out.extend_from_slice(&s.to_le_bytes());
        }
    }
    for t in &tensors {
        for v in t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> IoResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| IoError::Format(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> IoResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> IoResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses the header only: metadata and tensor table.
pub fn decode_header(bytes: &[u8]) -> IoResult<(CheckpointMeta, Vec<TensorEntry>, usize)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != MAGIC {
        return Err(IoError::Format("not a checkpoint (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(IoError::Version {
            what: "checkpoint",
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let len = c.u32()? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(c.take(len)?)
        .map_err(|e| IoError::Format(format!("checkpoint metadata: {e}")))?;
    let count = c.u32()? as usize;
    let mut table = Vec::with_capacity(count);
    for _ in 0..count {
        let len = c.u32()? as usize;
        let name = String::from_utf8(c.take(len)?.to_vec()).map_err(|_| IoError::Format("tensor name is not UTF-8".into()))?;
        let rank = c.u32()? as usize;
        let shape = (0..rank).map(|_| c.u64()).collect::<IoResult<Vec<u64>>>()?;
        table.push(TensorEntry { name, shape });
    }
    Ok((meta, table, c.pos))
}

/// Rebuilds parameters from bytes, checking the table against the layout
/// implied by the metadata.
pub fn decode(bytes: &[u8]) -> IoResult<ModelParams> {
    let (meta, table, start) = decode_header(bytes)?;
    // the draw is overwritten below; only the layout matters
    let mut params = ModelParams::init(&meta.config, meta.in_dim, meta.num_classes, meta.num_edges, &mut rng_for(0, 0))?;
    let expected: Vec<(String, Vec<u64>)> = params
        .tensors()
        .iter()
        .map(|t| (t.name.clone(), shape_of(&t.name, t.data.len(), &params)))
        .collect();
    if expected.len() != table.len() {
        return Err(IoError::Format(format!(
            "checkpoint lists {} tensors, the configuration implies {}",
            table.len(),
            expected.len()
        )));
    }
    for (entry, (name, shape)) in table.iter().zip(&expected) {
        if &entry.name != name || &entry.shape != shape {
            return Err(IoError::Format(format!(
                "tensor {} {:?} does not match expected {name} {shape:?}",
                entry.name, entry.shape
            )));
        }
    }
    let mut c = Cursor { bytes, pos: start };
    for t in params.tensors_mut() {
        for v in t.data.iter_mut() {
            *v = f64::from_le_bytes(c.take(8)?.try_into().expect("8 bytes"));
        }
    }
    if c.pos != bytes.len() {
        return Err(IoError::Format(format!("{} trailing bytes after payload", bytes.len() - c.pos)));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> IoResult<()> {
    let path = path.as_ref();
    fs::write(path, encode(params)).map_err(|e| IoError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> IoResult<ModelParams> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| IoError::io(path, e))?)
}
