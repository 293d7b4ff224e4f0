//! The envelope every command answers with: a verdict line, the
//! certificates backing it, and enough metadata to reproduce the run.
//! Serialization is deterministic apart from the timing field.

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub verdict: String,
    pub certificates: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub timing_ms: u128,
    pub version: String,
}

impl Report {
    pub fn new(command: &str, verdict: String, certificates: Value) -> Self {
        Report {
            command: command.to_string(),
            verdict,
            certificates,
            seed: None,
            timing_ms: 0,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// A short plain-text rendering for terminals.
    pub fn to_human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}: {}\n", self.command, self.verdict));
        render_value(&mut out, &self.certificates, 1);
        if let Some(seed) = self.seed {
            out.push_str(&format!("  seed: {seed}\n"));
        }
        out.push_str(&format!("  elapsed: {} ms\n", self.timing_ms));
        out
    }
}

fn render_value(out: &mut String, value: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match value {
        Value::Object(map) => {
            for (key, inner) in map {
                match inner {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{key}:\n"));
                        render_value(out, inner, depth + 1);
                    }
                    _ => out.push_str(&format!("{pad}{key}: {}\n", scalar(inner))),
                }
            }
        }
        Value::Array(items) => {
            if items.iter().all(|v| !v.is_object() && !v.is_array()) {
                let row: Vec<String> = items.iter().map(scalar).collect();
                out.push_str(&format!("{pad}[{}]\n", row.join(", ")));
            } else {
                for inner in items {
                    out.push_str(&format!("{pad}-\n"));
                    render_value(out, inner, depth + 1);
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn scalar(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reports_round_trip_and_render() {
        let mut report = Report::new(
            "check-aip",
            "holds".into(),
            json!({"hull_checks": 3, "witness": null, "prices": ["1/2", "2"]}),
        );
        report.seed = Some(7);
        report.timing_ms = 12;
        let text = report.to_json();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.verdict, "holds");
        assert_eq!(back.seed, Some(7));
        let human = report.to_human();
        assert!(human.starts_with("check-aip: holds\n"));
        assert!(human.contains("hull_checks: 3"));
        assert!(human.contains("[1/2, 2]"));
        assert!(human.contains("seed: 7"));
    }
}
