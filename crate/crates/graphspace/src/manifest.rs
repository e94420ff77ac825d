//! Run manifests: every CLI invocation emits one, and re-running the
//! recorded command with the recorded parameters reproduces the outputs
//! bit-identically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// flat key-value parameter map; BTreeMap keeps serialization stable
    pub parameters: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub versions: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert(
            "graphspace".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        );
        RunManifest {
            command: command.to_string(),
            parameters: BTreeMap::new(),
            seed: None,
            versions,
            outputs: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn output(mut self, path: &str) -> Self {
        self.outputs.push(path.to_string());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_serialization() {
        let m = RunManifest::new("sample")
            .param("p", "1/2")
            .param("depth", 16)
            .seed(7)
            .output("batch.bin");
        let a = serde_json::to_string(&m).unwrap();
        let b = serde_json::to_string(&m).unwrap();
        assert_eq!(a, b);
        let back: RunManifest = serde_json::from_str(&a).unwrap();
        assert_eq!(back, m);
    }
}
