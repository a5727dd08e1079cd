//! Optional JSON config file and seed resolution.
//!
//! The file mirrors the library config types section by section; command
//! line flags override whatever the file provides.

use std::path::Path;

use rankcompat::data_io::SynthConfig;
use rankcompat::pipeline::{CandidateSpec, SplitSpec};
use rankcompat::TrainConfig;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub train: Option<TrainConfig>,
    pub split: Option<SplitSpec>,
    pub candidates: Option<CandidateSpec>,
    pub synth: Option<SynthConfig>,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, rankcompat::Error> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| rankcompat::Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            rankcompat::Error::ParseError {
                path: path.display().to_string(),
                line: e.line(),
                column: e.column(),
                what: e.to_string(),
            }
        } else {
            rankcompat::Error::SchemaError {
                path: path.display().to_string(),
                what: e.to_string(),
            }
        }
    })
}

/// Seed precedence: explicit flag, then config file, then the
/// RANKCOMPAT_SEED environment variable, then 0.
pub fn resolve_seed(flag: Option<u64>, from_config: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(s) = from_config {
        return Ok(s);
    }
    match std::env::var("RANKCOMPAT_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|_| format!("RANKCOMPAT_SEED must be an unsigned integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}
