//! One module per subcommand, plus helpers they share.

pub mod classify;
pub mod evaluate;
pub mod generate;
pub mod inspect;
pub mod train;

use std::fs;
use std::path::Path;

use crate::error::CliError;

/// Create an output directory (and parents) if it does not exist yet.
pub(crate) fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parse a comma-separated fraction list such as "0.05,0.1".
pub(crate) fn parse_fractions(text: &str) -> Result<Vec<f64>, CliError> {
    let mut fractions = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let value: f64 = part
            .parse()
            .map_err(|_| CliError::Config(format!("invalid fraction '{part}'")))?;
        if !(0.0..=1.0).contains(&value) {
            return Err(CliError::Config(format!(
                "fraction {value} outside [0, 1]"
            )));
        }
        fractions.push(value);
    }
    if fractions.is_empty() {
        return Err(CliError::Config(
            "at least one corruption fraction is required".into(),
        ));
    }
    Ok(fractions)
}
