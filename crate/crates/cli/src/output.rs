//! Stable CSV/JSON emission plus the reproducibility manifest.

use crate::error::CliError;
use serde::Serialize;
use serde_json::{Map, Value};
use std::io::Write;
use std::path::PathBuf;

/// Fixed 10-significant-digit rendering for CSV cells.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.9e}")
}

/// RFC-4180-style quoting: only needed when a field contains metacharacters.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub input_digest: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str, params: Value, seed: Option<u64>, digest: Option<String>) -> Self {
        RunManifest {
            command: command.to_string(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest: digest,
        }
    }
}

/// Where results go: a file (manifest as a `.manifest.json` sidecar) or
/// stdout (manifest to stderr).
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Sink { out }
    }

    pub fn write(&self, body: &str, manifest: &RunManifest) -> Result<(), CliError> {
        let manifest_json = serde_json::to_string_pretty(manifest)
            .expect("manifest serialization cannot fail");
        match &self.out {
            Some(path) => {
                std::fs::write(path, body).map_err(|e| {
                    CliError::data(format!("cannot write {}: {e}", path.display()))
                })?;
                let sidecar = sidecar_path(path);
                std::fs::write(&sidecar, manifest_json).map_err(|e| {
                    CliError::data(format!("cannot write {}: {e}", sidecar.display()))
                })?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(body.as_bytes())
                    .map_err(|e| CliError::data(format!("cannot write stdout: {e}")))?;
                eprintln!("{manifest_json}");
            }
        }
        Ok(())
    }
}

fn sidecar_path(path: &PathBuf) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Helper for assembling manifest parameter maps in stable key order.
pub fn params(entries: &[(&str, Value)]) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert((*k).to_string(), v.clone());
    }
    Value::Object(map)
}
