//! Deterministic JSON run reports: every subcommand prints exactly one
//! report object on standard output; human diagnostics go to standard
//! error. Reports are byte-for-byte reproducible for fixed inputs and
//! seeds — wall time is only included when explicitly requested.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    /// short digests of the inputs, keyed by role
    pub inputs: BTreeMap<String, String>,
    pub result: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configs_peak: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_used: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

/// FNV-1a 64-bit digest, hex encoded: stable, dependency-free input
/// fingerprints for the report header.
pub fn digest(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

pub struct ReportBuilder {
    command: String,
    inputs: BTreeMap<String, String>,
    configs_peak: Option<usize>,
    budget_used: Option<u64>,
    started: Instant,
    timing: bool,
}

impl ReportBuilder {
    pub fn new(command: &str, timing: bool) -> Self {
        ReportBuilder {
            command: command.to_string(),
            inputs: BTreeMap::new(),
            configs_peak: None,
            budget_used: None,
            started: Instant::now(),
            timing,
        }
    }

    pub fn input(&mut self, role: &str, text: &str) -> &mut Self {
        self.inputs.insert(role.to_string(), digest(text));
        self
    }

    pub fn configs_peak(&mut self, peak: usize) -> &mut Self {
        self.configs_peak = Some(peak);
        self
    }

    pub fn budget_used(&mut self, used: u64) -> &mut Self {
        self.budget_used = Some(used);
        self
    }

    pub fn finish(self, result: serde_json::Value) -> RunReport {
        RunReport {
            command: self.command,
            inputs: self.inputs,
            result,
            configs_peak: self.configs_peak,
            budget_used: self.budget_used,
            wall_ms: if self.timing {
                Some(self.started.elapsed().as_millis() as u64)
            } else {
                None
            },
        }
    }
}

/// Prints the report as a single JSON document on standard output.
pub fn emit(report: &RunReport) {
    println!("{}", serde_json::to_string_pretty(report).expect("report serializes"));
}

/// Prints a single-line report (streaming protocol).
pub fn emit_line(value: &serde_json::Value) {
    println!("{}", serde_json::to_string(value).expect("line serializes"));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        assert_eq!(digest("tt"), digest("tt"));
        assert_ne!(digest("tt"), digest("ff"));
        assert_eq!(digest(""), "cbf29ce484222325");
    }

    #[test]
    fn report_omits_wall_time_by_default() {
        let b = ReportBuilder::new("parse", false);
        let r = b.finish(serde_json::json!({"ok": true}));
        let text = serde_json::to_string(&r).unwrap();
        assert!(!text.contains("wall_ms"));
    }
}
