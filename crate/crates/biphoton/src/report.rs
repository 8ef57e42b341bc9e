use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One headline number with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metric {
    /// `null` when the value is not finite (e.g. a CAR with no accidentals).
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub unit: String,
    /// Modules whose computations produced the value.
    pub modules: Vec<String>,
}

impl Metric {
    pub fn new(value: f64, unit: &str, modules: &[&str]) -> Self {
        Self {
            value: value.is_finite().then_some(value),
            stderr: None,
            unit: unit.into(),
            modules: modules.iter().map(|m| m.to_string()).collect(),
        }
    }

    pub fn with_stderr(mut self, stderr: Option<f64>) -> Self {
        self.stderr = stderr.filter(|s| s.is_finite());
        self
    }
}

/// Summary written as `report.json` by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub profile: String,
    pub config_digest: String,
    pub software_version: String,
    pub seed: u64,
    /// Only present with `--timing`, so default reports stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
    pub metrics: BTreeMap<String, Metric>,
}

impl RunReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).and_then(|m| m.value)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
