use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::CheckReport;

/// Outcome of a verification suite.
///
/// `wall_time_s` is left out of the serialized report unless explicitly recorded, so that
/// reruns with the same configuration produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub config: Value,
    pub checks: Vec<CheckReport>,
    pub overall_pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(suite: &str, config: Value, checks: Vec<CheckReport>) -> Self {
        let overall_pass = overall(&checks);
        Self {
            suite: suite.to_string(),
            config,
            checks,
            overall_pass,
            wall_time_s: None,
        }
    }

    pub fn to_json_pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// True when every non-advisory check passes.
pub fn overall(checks: &[CheckReport]) -> bool {
    checks.iter().all(|c| c.advisory || c.pass)
}
