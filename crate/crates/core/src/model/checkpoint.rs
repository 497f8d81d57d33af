//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"CNNVISCK"
//! 8       4     format version, u32 little-endian
//! 12      8     header length H, u64 little-endian
//! 20      H     UTF-8 JSON header {"model": ModelConfig, "meta": CheckpointMeta}
//! 20+H    ...   tensors in ModelParams::tensors() order; each is a u64 LE
//!               element count followed by that many f64 LE values
//! ```
//!
//! Nothing may follow the last tensor.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Model, ModelConfig, ModelParams};
use crate::data::{Task, Vocabulary};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const MAGIC: &[u8; 8] = b"CNNVISCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Metadata carried alongside the weights so a checkpoint can be used on
/// raw text without the training corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub task: Option<Task>,
    pub vocab: Option<Vocabulary>,
    /// Run configuration the model was trained with, if any.
    pub run_config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub meta: CheckpointMeta,
}

#[derive(Deserialize)]
struct Header {
    model: ModelConfig,
    meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn new(model: Model, meta: CheckpointMeta) -> Self {
        Self { model, meta }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&HeaderRef {
            model: &self.model.config,
            meta: &self.meta,
        })?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in self.model.params.tensors() {
            out.extend_from_slice(&(t.as_slice().len() as u64).to_le_bytes());
            for v in t.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::CorruptCheckpoint("bad magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let hlen = r.u64()? as usize;
        let header: Header = serde_json::from_slice(r.take(hlen)?)
            .map_err(|e| Error::CorruptCheckpoint(format!("header: {e}")))?;
        header
            .model
            .validate()
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        if let Some(v) = &header.meta.vocab {
            if v.len() != header.model.vocab_size {
                return Err(Error::CheckpointShape(format!(
                    "vocabulary has {} entries but the model expects {}",
                    v.len(),
                    header.model.vocab_size
                )));
            }
        }

        let mut params = ModelParams::zeros(&header.model);
        for (i, t) in params.tensors_mut().into_iter().enumerate() {
            let count = r.u64()? as usize;
            if count != t.as_slice().len() {
                return Err(Error::CheckpointShape(format!(
                    "tensor {i} holds {count} values, config implies {:?}",
                    t.shape()
                )));
            }
            fill(t, r.take(count.checked_mul(8).ok_or_else(overflow)?)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            model: Model {
                config: header.model,
                params,
            },
            meta: header.meta,
        })
    }

    /// Fails with a shape error unless the model's embedding table matches
    /// a vocabulary of `vocab_size` entries.
    pub fn expect_vocab_size(&self, vocab_size: usize) -> Result<()> {
        if self.model.config.vocab_size != vocab_size {
            return Err(Error::CheckpointShape(format!(
                "checkpoint vocabulary size {} does not match expected {vocab_size}",
                self.model.config.vocab_size
            )));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct HeaderRef<'a> {
    model: &'a ModelConfig,
    meta: &'a CheckpointMeta,
}

fn overflow() -> Error {
    Error::CorruptCheckpoint("tensor length overflow".into())
}

fn fill(t: &mut Matrix, raw: &[u8]) {
    for (v, chunk) in t.as_mut_slice().iter_mut().zip(raw.chunks_exact(8)) {
        *v = f64::from_le_bytes(chunk.try_into().unwrap());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or_else(overflow)?;
        if end > self.bytes.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "truncated: needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<Vec<u8>> {
    let bytes = ckpt.to_bytes()?;
    std::fs::write(path, &bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Hex SHA-256 of checkpoint bytes.
pub fn fingerprint(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
