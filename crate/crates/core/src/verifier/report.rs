//! JSON-lines report assembly.

use serde::{Deserialize, Serialize};

use super::{BoundCheck, ScenarioReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub config_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line<'a> {
    Check(&'a BoundCheck),
    Scenario(&'a ScenarioReport),
    Summary(&'a Summary),
}

/// One line per check, then per scenario, then the summary. A scenario
/// passes when its verdict matches the prediction.
pub fn render_report(
    checks: &[BoundCheck],
    scenarios: &[ScenarioReport],
    config_digest: &str,
    timestamp: Option<u64>,
) -> (String, Summary) {
    let passed = checks.iter().filter(|c| c.pass).count()
        + scenarios.iter().filter(|s| s.matches_prediction).count();
    let total = checks.len() + scenarios.len();
    let summary = Summary {
        total,
        passed,
        failed: total - passed,
        config_digest: config_digest.to_string(),
        timestamp,
    };
    let mut out = String::new();
    let line = |l: Line| serde_json::to_string(&l).expect("report line serializes");
    for c in checks {
        out.push_str(&line(Line::Check(c)));
        out.push('\n');
    }
    for s in scenarios {
        out.push_str(&line(Line::Scenario(s)));
        out.push('\n');
    }
    out.push_str(&line(Line::Summary(&summary)));
    out.push('\n');
    (out, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_failures_and_ends_with_summary() {
        let checks = vec![
            BoundCheck::inequality("a", 1.0, 2.0, String::new()),
            BoundCheck::inequality("b", 2.0, 1.0, String::new()),
        ];
        let (text, summary) = render_report(&checks, &[], "d", None);
        assert_eq!((summary.total, summary.passed, summary.failed), (2, 1, 1));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with(r#"{"type":"check""#));
        assert!(lines[2].contains(r#""type":"summary""#));
        assert!(!lines[2].contains("timestamp"));
        let (with_time, _) = render_report(&checks, &[], "d", Some(5));
        assert!(with_time.contains(r#""timestamp":5"#));
    }
}
