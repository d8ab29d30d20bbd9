//! Raw bytes to fixed-length token sequences.

use std::path::{Path, PathBuf};

use super::CorpusError;

/// Token id reserved for padding; byte values occupy 0..=255.
pub const PAD_TOKEN: u16 = 256;
/// Embedding vocabulary: 256 byte values plus the pad token.
pub const VOCAB_SIZE: usize = 257;

/// A raw binary as read from disk.
#[derive(Clone, Debug)]
pub struct ByteSequence {
    pub data: Vec<u8>,
    pub origin: PathBuf,
    pub original_length: usize,
}

impl ByteSequence {
    /// Wraps an in-memory buffer; `origin` is kept for error reporting.
    pub fn from_bytes(data: Vec<u8>, origin: impl Into<PathBuf>) -> Self {
        let original_length = data.len();
        ByteSequence {
            data,
            origin: origin.into(),
            original_length,
        }
    }
}

/// Reads a binary from disk.
pub fn read_bytes(path: &Path) -> Result<ByteSequence, CorpusError> {
    let data = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ByteSequence::from_bytes(data, path))
}

/// Fixed-length token sequence with a validity mask.
///
/// `tokens` holds exactly `l_max` entries in `0..=256`; real bytes form a
/// prefix and pad tokens a contiguous suffix. `mask[i]` is true exactly for
/// the real-byte prefix. The mask is the ground truth for validity: the model
/// consults it, not the token values, so garbage written into the padded
/// region cannot influence predictions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedSequence {
    pub tokens: Vec<u16>,
    pub mask: Vec<bool>,
    pub original_length: usize,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of real (unmasked) tokens.
    pub fn valid_len(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

/// Truncates or pads `b` to exactly `l_max` tokens.
///
/// Files longer than `l_max` keep their first `l_max` bytes; shorter files
/// are padded with [`PAD_TOKEN`]. Truncation keeps the prefix because
/// compiler headers and magic values cluster at the start of a file.
pub fn encode_sequence(b: &ByteSequence, l_max: usize) -> Result<EncodedSequence, CorpusError> {
    assert!(l_max >= 1, "l_max must be at least 1");
    if b.data.is_empty() {
        return Err(CorpusError::EmptyBinary(b.origin.clone()));
    }
    let keep = b.data.len().min(l_max);
    let mut tokens = Vec::with_capacity(l_max);
    tokens.extend(b.data[..keep].iter().map(|&byte| u16::from(byte)));
    tokens.resize(l_max, PAD_TOKEN);
    let mut mask = vec![true; keep];
    mask.resize(l_max, false);
    Ok(EncodedSequence {
        tokens,
        mask,
        original_length: b.original_length,
    })
}
