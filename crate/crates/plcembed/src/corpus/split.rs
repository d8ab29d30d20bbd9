//! Leakage-free train/validation/test splits.
//!
//! Splitting happens at program granularity: all binaries of one program land
//! in the same split, so no compiled variant of a test program is ever seen
//! during training.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{CorpusError, DatasetIndex};
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

/// Three positive fractions summing to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self, CorpusError> {
        let r = SplitRatios {
            train,
            validation,
            test,
        };
        if !(train > 0.0 && validation > 0.0 && test > 0.0) {
            return Err(CorpusError::InvalidRatios(format!(
                "all ratios must be positive, got {train}/{validation}/{test}"
            )));
        }
        let sum = train + validation + test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidRatios(format!(
                "ratios must sum to 1, got {sum}"
            )));
        }
        Ok(r)
    }

    fn as_array(self) -> [f64; 3] {
        [self.train, self.validation, self.test]
    }
}

impl Default for SplitRatios {
    /// 80/10/10 train/validation/test.
    fn default() -> Self {
        SplitRatios {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

/// Program-to-split assignment, deterministic per seed.
#[derive(Clone, Debug)]
pub struct SplitAssignment {
    assignments: BTreeMap<String, Split>,
    pub seed: u64,
    pub ratios: SplitRatios,
}

impl SplitAssignment {
    pub fn split_of(&self, program_id: &str) -> Option<Split> {
        self.assignments.get(program_id).copied()
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignments.values().filter(|s| **s == split).count()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> {
        self.assignments.iter().map(|(id, s)| (id.as_str(), *s))
    }
}

/// Per-split target counts by largest remainder; each is within 1 of
/// `ratio * total` and they sum to `total`.
fn target_counts(total: usize, ratios: [f64; 3]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    let mut fractions = [(0.0f64, 0usize); 3];
    let mut assigned = 0;
    for i in 0..3 {
        let exact = ratios[i] * total as f64;
        counts[i] = exact.floor() as usize;
        fractions[i] = (exact - exact.floor(), i);
        assigned += counts[i];
    }
    // Hand out the remainder to the largest fractional parts; ties go to the
    // earlier split so the result is deterministic.
    fractions.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for f in fractions.iter().take(total - assigned) {
        counts[f.1] += 1;
    }
    counts
}

/// Assigns every program to exactly one split.
///
/// The shuffle is seeded, so a fixed `(index, ratios, seed)` always yields the
/// same assignment. Program ids are sorted before shuffling, making the result
/// independent of record order in the CSV.
pub fn split_by_program(
    index: &DatasetIndex,
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitAssignment, CorpusError> {
    let mut ids: Vec<&str> = index.records.iter().map(|r| r.program_id.as_str()).collect();
    ids.sort_unstable();

    let counts = target_counts(ids.len(), ratios.as_array());
    for (i, split) in Split::ALL.iter().enumerate() {
        if counts[i] == 0 {
            return Err(CorpusError::TooFewPrograms {
                split: split.name(),
                programs: ids.len(),
                ratio: ratios.as_array()[i],
            });
        }
    }

    let mut rng = substream(seed, "split", 0);
    ids.shuffle(&mut rng);

    let mut assignments = BTreeMap::new();
    let mut cursor = 0;
    for (i, split) in Split::ALL.iter().enumerate() {
        for id in &ids[cursor..cursor + counts[i]] {
            assignments.insert((*id).to_string(), *split);
        }
        cursor += counts[i];
    }

    Ok(SplitAssignment {
        assignments,
        seed,
        ratios,
    })
}
