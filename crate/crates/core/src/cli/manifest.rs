//! Run manifests: configuration echo, seed and content hashes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Everything needed to reproduce a command's outputs. Maps are ordered so
/// the serialised form is byte-stable.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Input role to sha256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output file name to sha256 of its contents.
    pub outputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub results: BTreeMap<String, Value>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        Self {
            command: command.into(),
            config: serde_json::to_value(config).expect("config serialises"),
            ..Self::default()
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.insert(role.into(), sha256_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.outputs.insert(name, sha256_file(path)?);
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results
            .insert(key.into(), serde_json::to_value(value).expect("result serialises"));
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        text
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_known_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn serialisation_is_ordered() {
        let mut m = Manifest::new("x", &serde_json::json!({"b": 1, "a": 2}));
        m.result("z", 1);
        m.result("a", 2);
        assert_eq!(m.to_json(), m.clone().to_json());
        let text = m.to_json();
        assert!(text.find("\"a\": 2").unwrap() < text.find("\"z\": 1").unwrap());
    }
}
