//! Materializing labelled training items from a dataset index.

use super::encode::{encode_sequence, read_bytes, ByteSequence, EncodedSequence};
use super::split::{Split, SplitAssignment};
use super::{CorpusError, DatasetIndex, Toolchain};

/// What the label of an item is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Which compiler toolchain produced the binary (4 classes).
    Toolchain,
    /// What the underlying program does (taxonomy-sized).
    Functionality,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Toolchain => "toolchain",
            Task::Functionality => "functionality",
        }
    }

    pub fn class_count(self, index: &DatasetIndex) -> usize {
        match self {
            Task::Toolchain => Toolchain::COUNT,
            Task::Functionality => index.taxonomy.len(),
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "toolchain" => Ok(Task::Toolchain),
            "functionality" => Ok(Task::Functionality),
            other => Err(format!(
                "unknown task '{other}' (expected 'toolchain' or 'functionality')"
            )),
        }
    }
}

/// Human-readable class names in label order.
pub fn class_names(index: &DatasetIndex, task: Task) -> Vec<String> {
    match task {
        Task::Toolchain => Toolchain::ALL.iter().map(|t| t.name().to_string()).collect(),
        Task::Functionality => index.taxonomy.iter().map(|f| f.name.clone()).collect(),
    }
}

fn label_of(record_functionality: usize, toolchain: Toolchain, task: Task) -> usize {
    match task {
        Task::Toolchain => toolchain.code(),
        Task::Functionality => record_functionality,
    }
}

/// Raw labelled binaries for one split, in deterministic order: records in
/// index order, toolchains in code order within each record.
pub fn build_raw_items(
    index: &DatasetIndex,
    assignment: &SplitAssignment,
    split: Split,
    task: Task,
) -> Result<Vec<(ByteSequence, usize)>, CorpusError> {
    let mut items = Vec::new();
    for record in &index.records {
        if assignment.split_of(&record.program_id) != Some(split) {
            continue;
        }
        for toolchain in Toolchain::ALL {
            let Some(path) = record.binary(toolchain) else {
                continue;
            };
            let bytes = read_bytes(path)?;
            items.push((bytes, label_of(record.functionality.id, toolchain, task)));
        }
    }
    Ok(items)
}

/// Encoded labelled items for one split: raw items truncated/padded to `l_max`.
pub fn build_items(
    index: &DatasetIndex,
    assignment: &SplitAssignment,
    split: Split,
    task: Task,
    l_max: usize,
) -> Result<Vec<(EncodedSequence, usize)>, CorpusError> {
    build_raw_items(index, assignment, split, task)?
        .into_iter()
        .map(|(bytes, label)| Ok((encode_sequence(&bytes, l_max)?, label)))
        .collect()
}
