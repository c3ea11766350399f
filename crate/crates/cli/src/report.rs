//! Run reports and their byte-stable serialization.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config_hash: String,
    /// Only present with `--timing`, so that reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
    pub outputs: Vec<String>,
    pub assertions: BTreeMap<String, bool>,
    pub result: Value,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.assertions.values().all(|&b| b)
    }
}

/// A run that stopped early, with the exit code to report.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<ppot::Error> for Failure {
    fn from(e: ppot::Error) -> Self {
        use ppot::Error::*;
        let code = match e {
            NonConvergence { .. } | ModulusBudget { .. } => EXIT_ASSERTION,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

pub fn to_json(report: &RunReport) -> Result<String, Failure> {
    ppot::canon::to_canonical_json(report, true).map_err(Failure::from)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn json_round_trip() {
        let mut assertions = BTreeMap::new();
        assertions.insert("positive".to_string(), true);
        let r = RunReport {
            command: "capacity".into(),
            config_hash: "ab".into(),
            wall_time: None,
            outputs: vec!["x.csv".into()],
            assertions,
            result: json!({"value": 0.1, "n": 3}),
        };
        let text = to_json(&r).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&back).unwrap(), text);
        assert!(text.ends_with("}\n") && !text.contains('\r'));
    }
}
