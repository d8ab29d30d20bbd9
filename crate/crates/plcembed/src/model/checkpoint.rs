//! Checkpoint serialization.
//!
//! Layout: magic `PLCE`, format version (u32 LE), length-prefixed JSON meta
//! block (model config, scalar dtype, class names), parameter records in
//! canonical visit order (length-prefixed name, dims, raw little-endian
//! values), and a SHA-256 digest of everything before it. Round-trips are
//! bit-exact.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ModelConfig;
use super::params::ModelParams;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PLCE";
pub const CHECKPOINT_VERSION: u32 = 1;

const DIGEST_LEN: usize = 32;

/// Self-description stored in every checkpoint. Carrying the class names
/// makes a checkpoint usable for classification without the training dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub dtype: String,
    pub class_names: Vec<String>,
}

impl CheckpointMeta {
    /// Guard for loading a checkpoint into a task with a different class
    /// count.
    pub fn require_classes(&self, expected: usize) -> Result<(), CheckpointError> {
        if self.model.k_classes != expected {
            return Err(CheckpointError::ConfigMismatch(format!(
                "checkpoint has {} classes, task needs {expected}",
                self.model.k_classes
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint io failure at {path}: {source}")]
    IOFailure { path: PathBuf, source: io::Error },
    #[error("checkpoint format version {found} not supported (this build reads {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint does not fit this use: {0}")]
    ConfigMismatch(String),
}

fn corrupt(msg: impl Into<String>) -> CheckpointError {
    CheckpointError::CorruptCheckpoint(msg.into())
}

/// Serializes parameters plus self-describing meta and writes atomically-ish
/// (full buffer, single write).
pub fn save_checkpoint<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    class_names: &[String],
    path: &Path,
) -> Result<(), CheckpointError> {
    if class_names.len() != cfg.k_classes {
        return Err(CheckpointError::ConfigMismatch(format!(
            "{} class names for {} classes",
            class_names.len(),
            cfg.k_classes
        )));
    }
    let meta = CheckpointMeta {
        model: cfg.clone(),
        dtype: T::DTYPE.to_string(),
        class_names: class_names.to_vec(),
    };
    let meta_json =
        serde_json::to_vec(&meta).map_err(|e| corrupt(format!("meta serialization: {e}")))?;

    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta_json);

    out.extend_from_slice(&(params.tensor_count() as u32).to_le_bytes());
    params.visit(|p| {
        let name = p.name.as_bytes();
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name);
        out.push(p.value.shape().len() as u8);
        for &dim in p.value.shape() {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for &v in p.value.data() {
            v.write_le(&mut out);
        }
    });

    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);

    fs::write(path, &out).map_err(|source| CheckpointError::IOFailure {
        path: path.to_path_buf(),
        source,
    })
}

/// Cursor over the verified checkpoint body.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(corrupt(format!("unexpected end of file reading {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16_le(&mut self, what: &str) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32_le(&mut self, what: &str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64_le(&mut self, what: &str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

fn read_verified(path: &Path) -> Result<Vec<u8>, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::IOFailure {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.len() < DIGEST_LEN + 8 {
        return Err(corrupt("file shorter than header plus digest"));
    }
    let (body, stored) = bytes.split_at(bytes.len() - DIGEST_LEN);
    let digest = Sha256::digest(body);
    if digest.as_slice() != stored {
        return Err(corrupt("digest mismatch"));
    }
    Ok(body.to_vec())
}

fn parse_header(r: &mut Reader<'_>) -> Result<CheckpointMeta, CheckpointError> {
    let magic = r.take(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(corrupt(format!("bad magic {magic:02x?}")));
    }
    let version = r.u32_le("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let meta_len = r.u64_le("meta length")? as usize;
    let meta_bytes = r.take(meta_len, "meta block")?;
    serde_json::from_slice(meta_bytes).map_err(|e| corrupt(format!("meta block: {e}")))
}

/// Meta block only; cheap relative to loading every tensor.
pub fn read_meta(path: &Path) -> Result<CheckpointMeta, CheckpointError> {
    let body = read_verified(path)?;
    let mut r = Reader {
        bytes: &body,
        pos: 0,
    };
    parse_header(&mut r)
}

/// Loads parameters and meta; the scalar type must match the stored dtype.
pub fn load_checkpoint<T: Scalar>(
    path: &Path,
) -> Result<(ModelParams<T>, CheckpointMeta), CheckpointError> {
    let body = read_verified(path)?;
    let mut r = Reader {
        bytes: &body,
        pos: 0,
    };
    let meta = parse_header(&mut r)?;
    if meta.dtype != T::DTYPE {
        return Err(CheckpointError::ConfigMismatch(format!(
            "checkpoint stores {}, caller expects {}",
            meta.dtype,
            T::DTYPE
        )));
    }
    if meta.class_names.len() != meta.model.k_classes {
        return Err(corrupt(format!(
            "{} class names for {} classes",
            meta.class_names.len(),
            meta.model.k_classes
        )));
    }
    let mut params = ModelParams::<T>::with_shapes(&meta.model)
        .map_err(|e| corrupt(format!("stored config rejected: {e}")))?;

    let count = r.u32_le("parameter count")? as usize;
    if count != params.tensor_count() {
        return Err(corrupt(format!(
            "{count} parameter records, config implies {}",
            params.tensor_count()
        )));
    }
    // Records were written in canonical visit order; read them back the same
    // way, verifying names and shapes as we go.
    let mut failure: Option<CheckpointError> = None;
    params.visit_mut(|p| {
        if failure.is_some() {
            return;
        }
        let mut step = || -> Result<(), CheckpointError> {
            let name_len = r.u16_le("parameter name length")? as usize;
            let name = std::str::from_utf8(r.take(name_len, "parameter name")?)
                .map_err(|_| corrupt("parameter name is not UTF-8"))?;
            if name != p.name {
                return Err(corrupt(format!(
                    "parameter order mismatch: file has '{name}', expected '{}'",
                    p.name
                )));
            }
            let ndim = r.take(1, "rank")?[0] as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                dims.push(r.u64_le("dimension")? as usize);
            }
            if dims != p.value.shape() {
                return Err(corrupt(format!(
                    "'{name}' has shape {dims:?}, config implies {:?}",
                    p.value.shape()
                )));
            }
            let raw = r.take(p.value.len() * T::WIDTH, "values")?;
            for (i, v) in p.value.data_mut().iter_mut().enumerate() {
                *v = T::read_le(&raw[i * T::WIDTH..(i + 1) * T::WIDTH]);
            }
            Ok(())
        };
        if let Err(e) = step() {
            failure = Some(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes after parameter records"));
    }
    Ok((params, meta))
}
