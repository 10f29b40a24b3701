use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Provenance written alongside every output. It holds no timestamps or
/// host details, so rerunning a command reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub parameters: BTreeMap<String, Value>,
    /// Manifest of the input this output was derived from, when it had one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<Value>,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            tool: "lamkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            inputs: Vec::new(),
            config: None,
            seed: None,
            output: None,
            parameters: BTreeMap::new(),
            source: None,
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(display(path));
        self
    }

    pub fn config(mut self, path: &Path) -> Self {
        self.config = Some(display(path));
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn output(mut self, path: Option<&Path>) -> Self {
        self.output = path.map(display);
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    pub fn source(mut self, manifest: Option<Value>) -> Self {
        self.source = manifest;
        self
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("manifest serialises")
    }
}
