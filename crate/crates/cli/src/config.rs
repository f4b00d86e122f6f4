use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "COMPGEN_OUT_DIR";

/// Overlays the flags that were given on top of the JSON config file.
pub fn merge<A: Serialize + DeserializeOwned>(flags: &A, config: Option<&Path>) -> CliResult<A> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(flags)?)?);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut base: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(base_map) = &mut base else {
        return Err(CliError::usage(format!("config {} must hold a JSON object", path.display())));
    };
    if let Value::Object(given) = serde_json::to_value(flags)? {
        for (k, v) in given {
            if !v.is_null() {
                base_map.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
}

/// Default output location: `$COMPGEN_OUT_DIR/name`, or `out/name`.
pub fn default_out(name: &str) -> PathBuf {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
    if name.is_empty() {
        dir
    } else {
        dir.join(name)
    }
}

/// `cov.csv` -> `cov.summary.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
