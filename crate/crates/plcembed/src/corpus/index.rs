//! Master index loading.
//!
//! `Metadata/index.csv` is UTF-8 with a header row and these columns:
//!
//! ```text
//! program_id, functionality_id, functionality_name,
//! codesys_bin, geb_bin, openplcv2_bin, openplcv3_bin
//! ```
//!
//! Binary columns hold paths relative to the dataset root, or the literal
//! `FAIL` for a toolchain that could not compile the program.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{CorpusError, DatasetIndex, FunctionalityLabel, ProgramRecord, Toolchain};

/// Expected header, in order.
pub const INDEX_HEADER: [&str; 7] = [
    "program_id",
    "functionality_id",
    "functionality_name",
    "codesys_bin",
    "geb_bin",
    "openplcv2_bin",
    "openplcv3_bin",
];

/// Marker for a failed compilation in a binary column.
const FAIL: &str = "FAIL";

/// Loads and validates the dataset under `root`.
///
/// Validation covers: header shape, dense taxonomy ids, unique program ids,
/// at least one binary per program, and existence of every referenced path.
/// The result is a pure function of the directory content.
pub fn load_index(root: &Path) -> Result<DatasetIndex, CorpusError> {
    let index_path = root.join("Metadata").join("index.csv");
    if !index_path.is_file() {
        return Err(CorpusError::MissingMetadata(index_path));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(&index_path)
        .map_err(|e| CorpusError::MalformedRow {
            line: 1,
            reason: e.to_string(),
        })?;

    let headers = reader
        .headers()
        .map_err(|e| CorpusError::MalformedRow {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    // Column names may carry padding after the separators; compare trimmed.
    if headers.iter().map(str::trim).collect::<Vec<_>>() != INDEX_HEADER {
        return Err(CorpusError::MalformedRow {
            line: 1,
            reason: format!(
                "bad header: expected {:?}, got {:?}",
                INDEX_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    let mut seen_ids: BTreeMap<String, usize> = BTreeMap::new();

    for (row_idx, row) in reader.records().enumerate() {
        let line = row_idx + 2; // header is line 1
        let row = row.map_err(|e| CorpusError::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        let field = |i: usize| row.get(i).unwrap_or("").trim().to_string();

        let program_id = field(0);
        if program_id.is_empty() {
            return Err(CorpusError::MalformedRow {
                line,
                reason: "empty program_id".into(),
            });
        }
        if let Some(prev) = seen_ids.insert(program_id.clone(), line) {
            return Err(CorpusError::MalformedRow {
                line,
                reason: format!("duplicate program_id '{program_id}' (first seen at line {prev})"),
            });
        }

        let functionality_id: usize =
            field(1).parse().map_err(|_| CorpusError::MalformedRow {
                line,
                reason: format!("functionality_id '{}' is not a non-negative integer", field(1)),
            })?;
        let functionality_name = field(2);
        if functionality_name.is_empty() {
            return Err(CorpusError::MalformedRow {
                line,
                reason: "empty functionality_name".into(),
            });
        }
        if let Some(existing) = names.get(&functionality_id) {
            if *existing != functionality_name {
                return Err(CorpusError::MalformedRow {
                    line,
                    reason: format!(
                        "functionality_id {functionality_id} maps to both '{existing}' and '{functionality_name}'"
                    ),
                });
            }
        } else {
            names.insert(functionality_id, functionality_name.clone());
        }

        let mut binaries: [Option<PathBuf>; Toolchain::COUNT] = Default::default();
        for t in Toolchain::ALL {
            let cell = field(3 + t.code());
            if cell == FAIL {
                continue;
            }
            if cell.is_empty() {
                return Err(CorpusError::MalformedRow {
                    line,
                    reason: format!("empty {} (use FAIL for missing binaries)", t.column()),
                });
            }
            let path = root.join(&cell);
            if !path.is_file() {
                return Err(CorpusError::DanglingPath(path));
            }
            binaries[t.code()] = Some(path);
        }
        if binaries.iter().all(|b| b.is_none()) {
            return Err(CorpusError::MalformedRow {
                line,
                reason: format!("program '{program_id}' has no binaries at all"),
            });
        }

        records.push(ProgramRecord {
            program_id,
            source_path: None,
            binaries,
            functionality: FunctionalityLabel {
                id: functionality_id,
                name: functionality_name,
            },
        });
    }

    if records.is_empty() {
        return Err(CorpusError::MalformedRow {
            line: 2,
            reason: "index holds no programs".into(),
        });
    }

    // Referenced ids must be dense 0..K.
    let k = names.keys().max().map_or(0, |m| m + 1);
    for id in 0..k {
        if !names.contains_key(&id) {
            return Err(CorpusError::InvalidTaxonomy {
                expected: k,
                reason: format!("id {id} is never referenced"),
            });
        }
    }
    let taxonomy = names
        .into_iter()
        .map(|(id, name)| FunctionalityLabel { id, name })
        .collect();

    Ok(DatasetIndex {
        records,
        taxonomy,
        root: root.to_path_buf(),
    })
}
