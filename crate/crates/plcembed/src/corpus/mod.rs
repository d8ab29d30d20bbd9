//! Dataset model and ingestion.
//!
//! A dataset root follows this layout:
//!
//! ```text
//! <root>/
//!   Source/<toolchain>/...      (optional, not read here)
//!   Binary/<toolchain>/...      raw executables
//!   Metadata/index.csv          master index (see `index` module)
//!   README.md
//! ```
//!
//! Binaries are opaque byte strings; nothing here parses executable formats.
//! Index loading and encoding are pure functions of the directory content,
//! and a loaded [`DatasetIndex`] is immutable and shareable across threads.

mod encode;
mod index;
mod items;
mod split;
mod weights;

pub use encode::{encode_sequence, read_bytes, ByteSequence, EncodedSequence, PAD_TOKEN, VOCAB_SIZE};
pub use index::{load_index, INDEX_HEADER};
pub use items::{build_items, build_raw_items, class_names, Task};
pub use split::{split_by_program, Split, SplitAssignment, SplitRatios};
pub use weights::{class_weights, ClassWeights};

use std::path::PathBuf;

use thiserror::Error;

/// The four supported compiler toolchains, with stable codes 0-3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Toolchain {
    CoDeSys = 0,
    Geb = 1,
    OpenPlcV2 = 2,
    OpenPlcV3 = 3,
}

impl Toolchain {
    pub const ALL: [Toolchain; 4] = [
        Toolchain::CoDeSys,
        Toolchain::Geb,
        Toolchain::OpenPlcV2,
        Toolchain::OpenPlcV3,
    ];

    pub const COUNT: usize = 4;

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Toolchain> {
        Toolchain::ALL.get(code).copied()
    }

    /// Display name used in reports and classifier output.
    pub fn name(self) -> &'static str {
        match self {
            Toolchain::CoDeSys => "CoDeSys",
            Toolchain::Geb => "GEB",
            Toolchain::OpenPlcV2 => "OpenPLC-V2",
            Toolchain::OpenPlcV3 => "OpenPLC-V3",
        }
    }

    /// Directory name under `Binary/` and `Source/`.
    pub fn dir_name(self) -> &'static str {
        match self {
            Toolchain::CoDeSys => "codesys",
            Toolchain::Geb => "geb",
            Toolchain::OpenPlcV2 => "openplcv2",
            Toolchain::OpenPlcV3 => "openplcv3",
        }
    }

    /// Column name in the master index CSV.
    pub fn column(self) -> &'static str {
        match self {
            Toolchain::CoDeSys => "codesys_bin",
            Toolchain::Geb => "geb_bin",
            Toolchain::OpenPlcV2 => "openplcv2_bin",
            Toolchain::OpenPlcV3 => "openplcv3_bin",
        }
    }
}

impl std::fmt::Display for Toolchain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Toolchain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CoDeSys" | "codesys" => Ok(Toolchain::CoDeSys),
            "GEB" | "geb" => Ok(Toolchain::Geb),
            "OpenPLC-V2" | "openplcv2" => Ok(Toolchain::OpenPlcV2),
            "OpenPLC-V3" | "openplcv3" => Ok(Toolchain::OpenPlcV3),
            other => Err(format!("unknown toolchain '{other}'")),
        }
    }
}

/// One functionality category. The taxonomy is data, loaded from the index,
/// never compiled in; ids are dense `0..K`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionalityLabel {
    pub id: usize,
    pub name: String,
}

/// One PLC program with its per-toolchain binaries.
#[derive(Clone, Debug)]
pub struct ProgramRecord {
    pub program_id: String,
    pub source_path: Option<PathBuf>,
    /// Indexed by `Toolchain::code()`; `None` means compilation failed.
    pub binaries: [Option<PathBuf>; Toolchain::COUNT],
    pub functionality: FunctionalityLabel,
}

impl ProgramRecord {
    pub fn binary(&self, t: Toolchain) -> Option<&PathBuf> {
        self.binaries[t.code()].as_ref()
    }

    pub fn binary_count(&self) -> usize {
        self.binaries.iter().filter(|b| b.is_some()).count()
    }
}

/// Validated dataset index: programs, taxonomy, and the root they live under.
#[derive(Clone, Debug)]
pub struct DatasetIndex {
    pub records: Vec<ProgramRecord>,
    pub taxonomy: Vec<FunctionalityLabel>,
    pub root: PathBuf,
}

impl DatasetIndex {
    pub fn program_count(&self) -> usize {
        self.records.len()
    }

    /// Binaries present for one toolchain.
    pub fn binary_count(&self, t: Toolchain) -> usize {
        self.records.iter().filter(|r| r.binary(t).is_some()).count()
    }

    pub fn total_binaries(&self) -> usize {
        self.records.iter().map(|r| r.binary_count()).sum()
    }

    /// Programs per functionality category, indexed by category id.
    pub fn category_histogram(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.taxonomy.len()];
        for r in &self.records {
            h[r.functionality.id] += 1;
        }
        h
    }
}

/// Errors raised by dataset ingestion and encoding.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no master index at {0} (expected Metadata/index.csv under the dataset root)")]
    MissingMetadata(PathBuf),
    #[error("malformed index row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("index references a missing file: {0}")]
    DanglingPath(PathBuf),
    #[error("taxonomy ids are not dense 0..{expected}: {reason}")]
    InvalidTaxonomy { expected: usize, reason: String },
    #[error("empty binary: {0}")]
    EmptyBinary(PathBuf),
    #[error("split ratios invalid: {0}")]
    InvalidRatios(String),
    #[error("too few programs: split '{split}' would be empty ({programs} programs, ratio {ratio})")]
    TooFewPrograms {
        split: &'static str,
        programs: usize,
        ratio: f64,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
