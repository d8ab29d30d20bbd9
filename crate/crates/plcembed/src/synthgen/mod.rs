//! Synthetic multi-dialect corpus generator.
//!
//! Produces labeled binaries in four configurable "compiler dialects": each
//! program is one payload (category-specific byte motifs) wrapped four ways,
//! so dialect identity lives in the wrapping (header magic, periodic insert
//! patterns, filler byte bias) while functionality identity lives in the
//! payload and survives across dialects. Output follows the dataset layout
//! the corpus module loads, and everything derives deterministically from
//! the seed.

mod emit;
mod generate;
mod payload;

pub use emit::emit_binary;
pub use generate::generate_corpus;
pub use payload::{make_banded_payload, make_payload, MotifBanks};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusError;

pub const DIALECT_COUNT: usize = 4;

/// Byte-level fingerprint description of one synthetic compiler dialect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DialectSpec {
    /// 0..=3, doubles as the toolchain label.
    pub dialect_id: usize,
    /// File prefix, 4–16 bytes, unique per dialect.
    pub header_magic: Vec<u8>,
    /// Pattern stamped at every `period`-aligned offset of the body.
    pub insert_pattern: Vec<u8>,
    pub period: usize,
    /// Inclusive range for the number of payload sections.
    pub section_count_range: (usize, usize),
    /// Relative sampling weights for the 256 byte values used as filler.
    pub byte_bias: Vec<f64>,
}

impl DialectSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.dialect_id >= DIALECT_COUNT {
            return Err(SynthError::InvalidConfig(format!(
                "dialect_id {} out of range 0..{DIALECT_COUNT}",
                self.dialect_id
            )));
        }
        if !(4..=16).contains(&self.header_magic.len()) {
            return Err(SynthError::InvalidConfig(format!(
                "header_magic must be 4-16 bytes, got {}",
                self.header_magic.len()
            )));
        }
        if self.insert_pattern.is_empty() || self.insert_pattern.len() > self.period {
            return Err(SynthError::InvalidConfig(format!(
                "insert_pattern length {} must be in 1..=period ({})",
                self.insert_pattern.len(),
                self.period
            )));
        }
        let (lo, hi) = self.section_count_range;
        if lo == 0 || lo > hi {
            return Err(SynthError::InvalidConfig(format!(
                "section_count_range ({lo}, {hi}) must satisfy 1 <= min <= max"
            )));
        }
        if self.byte_bias.len() != 256 {
            return Err(SynthError::InvalidConfig(format!(
                "byte_bias needs 256 weights, got {}",
                self.byte_bias.len()
            )));
        }
        if self.byte_bias.iter().any(|w| !w.is_finite() || *w < 0.0)
            || self.byte_bias.iter().sum::<f64>() <= 0.0
        {
            return Err(SynthError::InvalidConfig(
                "byte_bias weights must be non-negative, finite, and not all zero".into(),
            ));
        }
        Ok(())
    }
}

/// Validates a full dialect set: ids 0..=3 in order, distinct magics.
pub fn validate_dialects(dialects: &[DialectSpec]) -> Result<(), SynthError> {
    if dialects.len() != DIALECT_COUNT {
        return Err(SynthError::InvalidConfig(format!(
            "expected {DIALECT_COUNT} dialects, got {}",
            dialects.len()
        )));
    }
    for (i, d) in dialects.iter().enumerate() {
        d.validate()?;
        if d.dialect_id != i {
            return Err(SynthError::InvalidConfig(format!(
                "dialect at position {i} has dialect_id {}",
                d.dialect_id
            )));
        }
        for other in &dialects[..i] {
            if other.header_magic == d.header_magic {
                return Err(SynthError::InvalidConfig(format!(
                    "dialects {} and {i} share a header magic",
                    other.dialect_id
                )));
            }
        }
    }
    Ok(())
}

/// Corpus-level generation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Number of programs; each is emitted once per dialect.
    pub programs_per_dialect: usize,
    /// Number of functionality categories, assigned round-robin.
    pub categories: usize,
    /// Inclusive bounds on each emitted binary's total length.
    pub length_range: (usize, usize),
    /// Fraction of payload content drawn from a bank shared between all
    /// categories; 0 = fully category-specific, values near 1 make the
    /// functionality task hard.
    pub payload_overlap: f64,
    /// Carry the category signal by placement instead of content: every
    /// category uses the same fingerprint motifs at the same rates, but
    /// splits them between an early and a late payload band in its own way.
    /// Local byte statistics then say nothing about the category; only where
    /// in the file each motif sits does. Requires payload_overlap >= 0.75 so
    /// coded motifs stay on isolated, widely spaced sites.
    #[serde(default)]
    pub banded_fingerprints: bool,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            programs_per_dialect: 100,
            categories: 4,
            length_range: (1024, 2048),
            payload_overlap: 0.5,
            banded_fingerprints: false,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.programs_per_dialect == 0 {
            return Err(SynthError::InvalidConfig(
                "programs_per_dialect must be at least 1".into(),
            ));
        }
        if self.categories < 2 {
            return Err(SynthError::InvalidConfig(
                "need at least 2 categories".into(),
            ));
        }
        let (min, max) = self.length_range;
        if min < 64 || min > max {
            return Err(SynthError::InvalidConfig(format!(
                "length_range ({min}, {max}) must satisfy 64 <= min <= max"
            )));
        }
        if !(0.0..1.0).contains(&self.payload_overlap) {
            return Err(SynthError::InvalidConfig(format!(
                "payload_overlap {} must lie in [0, 1)",
                self.payload_overlap
            )));
        }
        if self.banded_fingerprints {
            if min < 192 {
                return Err(SynthError::InvalidConfig(format!(
                    "banded fingerprints need length_range.0 >= 192 so payloads \
                     have room for both bands, got {min}"
                )));
            }
            if self.payload_overlap < 0.75 {
                return Err(SynthError::InvalidConfig(format!(
                    "banded fingerprints need payload_overlap >= 0.75 to keep \
                     coded motifs on isolated sites, got {}",
                    self.payload_overlap
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("io failure at {path}: {source}")]
    IOFailure {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// The built-in dialect set: 8-byte magics, distinct periodic fingerprints
/// (periods 32/48/64/96), and per-dialect filler bias toward different byte
/// ranges.
pub fn default_dialects() -> Vec<DialectSpec> {
    let bias = |favored: Option<std::ops::Range<usize>>| -> Vec<f64> {
        let mut w = vec![1.0; 256];
        if let Some(range) = favored {
            for b in range {
                w[b] = 6.0;
            }
        }
        w
    };
    vec![
        DialectSpec {
            dialect_id: 0,
            header_magic: b"\x7fCDS\x01\x00\xc0\xde".to_vec(),
            insert_pattern: b"\xc0\xde\x55\xaa".to_vec(),
            period: 32,
            section_count_range: (2, 5),
            byte_bias: bias(None),
        },
        DialectSpec {
            dialect_id: 1,
            header_magic: b"GEB!\x02\x00\x00\x01".to_vec(),
            insert_pattern: b"\x47\x45\x42\x00".to_vec(),
            period: 48,
            section_count_range: (2, 5),
            byte_bias: bias(Some(0x00..0x40)),
        },
        DialectSpec {
            dialect_id: 2,
            header_magic: b"OPLC\x32\x00\xfe\xed".to_vec(),
            insert_pattern: b"\xfe\xed\x02\x00".to_vec(),
            period: 64,
            section_count_range: (2, 5),
            byte_bias: bias(Some(0x80..0xc0)),
        },
        DialectSpec {
            dialect_id: 3,
            header_magic: b"OPLC\x33\x00\xbe\xef".to_vec(),
            insert_pattern: b"\xbe\xef\x03\x00".to_vec(),
            period: 96,
            section_count_range: (2, 5),
            byte_bias: bias(Some(0xc0..0x100)),
        },
    ]
}
