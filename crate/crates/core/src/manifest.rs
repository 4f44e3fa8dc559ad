//! `manifest.json`, written next to every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Subcommand that produced the directory.
    pub command: String,
    /// Full argument list, enough to re-run the command.
    pub args: Vec<String>,
    pub config_paths: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub version: String,
    /// Files written by the command, relative to `out_dir`.
    pub outputs: Vec<String>,
    /// Effective configuration after defaults and overrides.
    pub config: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            args: Vec::new(),
            config_paths: Vec::new(),
            seed: None,
            out_dir: out_dir.to_path_buf(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            config: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::ConfigFile {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}
