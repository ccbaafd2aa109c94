//! Run-metadata sidecars.
//!
//! Every artifact `foo.csv` gets a `foo.csv.meta.json` recording the tool and
//! encoder versions, the parameters and a SHA-256 of every input file. The
//! timestamp is the only field that differs between identical runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::ENCODER;
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = concat!("vpr-jpeg ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub encoder: String,
    pub subcommand: String,
    pub params: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub created_unix: u64,
}

impl RunMetadata {
    pub fn new(subcommand: &str, params: serde_json::Value) -> Self {
        RunMetadata {
            tool: TOOL_VERSION.to_string(),
            encoder: ENCODER.to_string(),
            subcommand: subcommand.to_string(),
            params,
            inputs: Vec::new(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    /// Digest a file; directories are digested file by file in name order.
    pub fn input(mut self, path: &Path) -> Result<Self> {
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            for entry in entries {
                self = self.input(&entry)?;
            }
            return Ok(self);
        }
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(self)
    }

    /// Write next to `artifact` as `<artifact>.meta.json`.
    pub fn write_beside(&self, artifact: &Path) -> Result<PathBuf> {
        let mut name = artifact.as_os_str().to_owned();
        name.push(".meta.json");
        let path = PathBuf::from(name);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
