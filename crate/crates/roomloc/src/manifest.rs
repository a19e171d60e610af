//! Run manifests.
//!
//! Every command that writes files also writes a manifest recording the
//! subcommand, all parameters, the tool version, and a SHA-256 digest per
//! output, which is enough to reproduce and verify the run. Manifests
//! contain no timestamps, so repeated runs yield byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub outputs: Vec<OutputDigest>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        RunManifest {
            tool: "roomloc".into(),
            tool_version: TOOL_VERSION.into(),
            subcommand: subcommand.into(),
            parameters: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn param_opt(&mut self, key: &str, value: &Option<impl ToString>) -> &mut Self {
        if let Some(v) = value {
            self.param(key, v.to_string());
        }
        self
    }

    /// Digests an already-written output file.
    pub fn record_output(&mut self, path: &Path) -> std::io::Result<&mut Self> {
        let bytes = std::fs::read(path)?;
        self.outputs.push(OutputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(self)
    }

    /// Serializes to pretty JSON with stable key order.
    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        json
    }

    /// Writes the manifest next to the primary output
    /// (`<output>.manifest.json`).
    pub fn write_alongside(&self, primary_output: &Path) -> std::io::Result<PathBuf> {
        let path = manifest_path(primary_output);
        std::fs::write(&path, self.to_json())?;
        Ok(path)
    }
}

pub fn manifest_path(primary_output: &Path) -> PathBuf {
    let mut name = primary_output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary_output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_is_deterministic_and_complete() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("data.csv");
        std::fs::write(&out, "hello\n").unwrap();

        let build = || {
            let mut m = RunManifest::new("augment");
            m.param("seed", 7).param("range", "0.4,1.0,0.2,5");
            m.record_output(&out).unwrap();
            m.to_json()
        };
        let a = build();
        let b = build();
        assert_eq!(a, b);
        assert!(a.contains("\"subcommand\": \"augment\""));
        assert!(a.contains("\"sha256\""));

        let parsed: RunManifest = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed.parameters["seed"], "7");
        assert_eq!(parsed.outputs.len(), 1);
        assert_eq!(
            parsed.outputs[0].sha256,
            hex::encode(Sha256::digest(b"hello\n"))
        );
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("/tmp/out/grid.csv")),
            PathBuf::from("/tmp/out/grid.csv.manifest.json")
        );
    }
}
