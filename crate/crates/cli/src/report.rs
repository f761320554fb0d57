//! Machine-readable residual reports.
//!
//! A report is a table of named checks, each carrying the measured residual,
//! the threshold it was compared against, and a human-readable anchor naming
//! the identity being checked. Serialization is deterministic for a fixed
//! spec, seed and options, except for the timings field.

use serde::{Deserialize, Serialize};

/// One verified identity.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    /// Stable identifier, unique within a report.
    pub id: String,
    /// What was measured, with context (dimensions, verdicts, witnesses).
    pub description: String,
    /// Measured residual (Frobenius norm unless stated otherwise).
    pub residual: f64,
    /// The check passes when `residual ≤ threshold`.
    pub threshold: f64,
    pub pass: bool,
    /// Name of the identity this check certifies.
    pub anchor: String,
}

/// Wall-clock timings; excluded from the determinism contract.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Timings {
    pub total_ms: f64,
}

/// A full command report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub version: u32,
    pub command: String,
    pub checks: Vec<Check>,
    /// `"pass"` exactly when every check passes.
    pub summary: String,
    pub timings: Timings,
    /// Command-specific payloads (for example the adjoint superoperator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<serde_json::Value>,
}

impl Report {
    pub fn new(command: &str, mut checks: Vec<Check>, total_ms: f64) -> Report {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let pass = checks.iter().all(|c| c.pass);
        Report {
            version: 1,
            command: command.into(),
            checks,
            summary: if pass { "pass".into() } else { "fail".into() },
            timings: Timings { total_ms },
            artifacts: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary == "pass"
    }

    /// Deterministic JSON serialization.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text rendering: one line per check plus the summary.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<44} residual={:10.3e} threshold={:9.1e}  {}",
                if c.pass { "pass" } else { "FAIL" },
                c.id,
                c.residual,
                c.threshold,
                c.description
            );
        }
        let _ = writeln!(out, "summary: {}", self.summary);
        out
    }
}

/// Builds a check with the pass flag derived from the residual.
pub fn check(id: &str, anchor: &str, description: String, residual: f64, threshold: f64) -> Check {
    Check {
        id: id.into(),
        description,
        residual,
        threshold,
        pass: residual <= threshold,
        anchor: anchor.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_passes() {
        let r = Report::new("validate", vec![], 0.0);
        assert!(r.passed());
    }

    #[test]
    fn any_failed_check_fails_the_summary() {
        let checks = vec![
            check("a", "x", "ok".into(), 0.0, 1e-9),
            check("b", "y", "bad".into(), 1.0, 1e-9),
        ];
        let r = Report::new("validate", checks, 0.0);
        assert!(!r.passed());
    }

    #[test]
    fn json_round_trip() {
        let checks = vec![check("a.b", "anchor", "desc".into(), 1.25e-12, 1e-9)];
        let mut r = Report::new("gns", checks, 12.5);
        r.artifacts = Some(serde_json::json!({"k": [1.0, 2.0]}));
        let parsed: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn checks_are_sorted_by_id() {
        let checks = vec![
            check("z", "x", String::new(), 0.0, 1.0),
            check("a", "x", String::new(), 0.0, 1.0),
        ];
        let r = Report::new("validate", checks, 0.0);
        assert_eq!(r.checks[0].id, "a");
        assert_eq!(r.checks[1].id, "z");
    }
}
