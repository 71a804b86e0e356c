use serde::Serialize;

use crate::binary::Verdict;

/// Outcome of one identity-test run, the unit of experiment output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialReport {
    pub verdict: Verdict,
    pub n: usize,
    pub eps: f64,
    #[serde(rename = "L")]
    pub l: u64,
    pub mu: Option<f64>,
    pub seed: u64,
    pub total_samples: u64,
    pub per_k_samples: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triggering_index: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triggering_pauli: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
    pub m: u64,
    pub rho: String,
    pub sigma: String,
}

impl TrialReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
