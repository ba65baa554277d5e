use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").expect("string write");
    }
    s
}

/// Artifact writer. CSV files start with a `#` provenance line; JSON objects
/// carry the same fields.
pub struct Output {
    dir: PathBuf,
    hash: String,
    scenario: &'static str,
}

impl Output {
    pub fn new(dir: PathBuf, hash: String, scenario: &'static str) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir, hash, scenario })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn header(&self) -> String {
        format!("# wgm-cqed {} scenario={} config_sha256={}\n", env!("CARGO_PKG_VERSION"), self.scenario, self.hash)
    }

    fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, body).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        self.write(name, &format!("{}{body}", self.header()))
    }

    pub fn json(&self, name: &str, mut value: serde_json::Value) -> Result<PathBuf, CliError> {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("config_sha256".into(), self.hash.clone().into());
            obj.insert("scenario".into(), self.scenario.into());
            obj.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        }
        let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.write(name, &format!("{text}\n"))
    }

    /// JSON lines; the first line holds the provenance record.
    pub fn json_lines(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let head = serde_json::json!({
            "config_sha256": self.hash,
            "scenario": self.scenario,
            "version": env!("CARGO_PKG_VERSION"),
        });
        self.write(name, &format!("{head}\n{body}"))
    }
}
