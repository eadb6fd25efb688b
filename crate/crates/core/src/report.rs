//! Report assembly: check rows, CSV rendering, and provenance metadata.
//!
//! Every emitted file embeds the tool version and the plan hash so results
//! stay attributable. Rows render in canonical order (check id, then index)
//! regardless of how the checks were scheduled, and floats print in Rust's
//! shortest round-trip form, so identical runs produce identical bytes.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// One pass/fail line of a verification suite.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub check_id: String,
    pub k_or_n: i64,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(check_id: impl Into<String>, k_or_n: i64, value: f64, bound: f64, slack: f64, pass: bool) -> Self {
        CheckRow { check_id: check_id.into(), k_or_n, value, bound, slack, pass }
    }
}

/// Provenance stamped into every report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportMeta {
    pub tool: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ReportMeta {
    pub fn new(tool: impl Into<String>) -> Self {
        ReportMeta { tool: tool.into(), plan_sha256: None, seed: None }
    }

    pub fn with_plan(mut self, sha: impl Into<String>) -> Self {
        self.plan_sha256 = Some(sha.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Render rows as CSV with a provenance comment line, sorted canonically.
pub fn render_csv(meta: &ReportMeta, rows: &[CheckRow]) -> String {
    let mut sorted: Vec<&CheckRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.check_id.cmp(&b.check_id).then(a.k_or_n.cmp(&b.k_or_n)));
    let mut out = String::new();
    out.push_str(&format!(
        "# tool={} plan_sha256={} seed={}\n",
        meta.tool,
        meta.plan_sha256.as_deref().unwrap_or("-"),
        meta.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".to_string()),
    ));
    out.push_str("check_id,k_or_n,value,bound,slack,pass\n");
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.check_id, r.k_or_n, r.value, r.bound, r.slack, r.pass
        ));
    }
    out
}

/// Wrap a serializable payload with provenance for JSON emission.
pub fn json_report<T: Serialize>(meta: &ReportMeta, payload: &T) -> serde_json::Value {
    serde_json::json!({
        "tool": meta.tool,
        "plan_sha256": meta.plan_sha256,
        "seed": meta.seed,
        "report": payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_sorted_and_stamped() {
        let meta = ReportMeta::new("epslab-test").with_plan("abc").with_seed(7);
        let rows = vec![
            CheckRow::new("b_check", 2, 1.0, 2.0, 1.0, true),
            CheckRow::new("a_check", 5, 0.5, 0.25, -0.25, false),
            CheckRow::new("a_check", 1, 0.5, 0.25, -0.25, false),
        ];
        let csv = render_csv(&meta, &rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# tool=epslab-test plan_sha256=abc seed=7");
        assert_eq!(lines[1], "check_id,k_or_n,value,bound,slack,pass");
        assert!(lines[2].starts_with("a_check,1"));
        assert!(lines[3].starts_with("a_check,5"));
        assert!(lines[4].starts_with("b_check,2"));
    }

    #[test]
    fn empty_report_is_header_only() {
        let meta = ReportMeta::new("epslab-test");
        let csv = render_csv(&meta, &[]);
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn hashes_are_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
