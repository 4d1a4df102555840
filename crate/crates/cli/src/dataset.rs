//! Survival-data ingestion: newline-separated reals or a single-column CSV
//! with an optional header line.

use crate::error::CliError;
use mrl_core::SortedSample;
use sha2::{Digest, Sha256};
use std::path::Path;

pub struct Dataset {
    pub sample: SortedSample,
    /// SHA-256 of the raw file bytes, hex encoded.
    pub digest: String,
}

pub fn load(path: &Path) -> Result<Dataset, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let digest = format!("{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::data(format!("{} is not valid UTF-8", path.display())))?;

    let mut values = Vec::new();
    let mut first_data_line = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut field = raw.trim();
        if field.is_empty() {
            continue;
        }
        // Single-column CSV: tolerate a trailing comma and quoting.
        if let Some(stripped) = field.strip_suffix(',') {
            field = stripped.trim();
        }
        field = field.trim_matches('"').trim();
        match field.parse::<f64>() {
            Ok(v) => {
                if !v.is_finite() || v < 0.0 {
                    return Err(CliError::data(format!(
                        "line {line_no}: value {v} must be finite and nonnegative"
                    )));
                }
                values.push(v);
                first_data_line = false;
            }
            Err(_) => {
                if first_data_line {
                    // Non-numeric first line is a header.
                    first_data_line = false;
                    continue;
                }
                return Err(CliError::data(format!(
                    "line {line_no}: cannot parse '{field}' as a number"
                )));
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::data("no data".to_string()));
    }
    let sample = SortedSample::new(values).map_err(|e| CliError::data(e.to_string()))?;
    Ok(Dataset { sample, digest })
}
