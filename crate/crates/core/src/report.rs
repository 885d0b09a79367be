//! JSON and Markdown renderings of run results and shortlists.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::discovery::{AttributeScore, RankedSummaries, Shortlist};
use crate::frame::Frame;
use crate::summary::ChangeSummary;

/// JSON Schema (draft 2020-12) that every [`Report`] serialization satisfies.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub source: String,
    pub target: String,
    pub key: String,
    pub target_attribute: String,
    pub rows: usize,
    /// Exact decimal Σ|new − old|.
    pub total_abs_change: String,
}

impl RunMetadata {
    pub fn new(frame: &Frame, source: impl Into<String>, target: impl Into<String>) -> Self {
        RunMetadata {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            source: source.into(),
            target: target.into(),
            key: frame.key_attribute().to_string(),
            target_attribute: frame.target().to_string(),
            rows: frame.len(),
            total_abs_change: frame.delta().total_abs_change.normalize().to_string(),
        }
    }
}

/// Run metadata followed by the ranked summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metadata: RunMetadata,
    #[serde(flatten)]
    pub ranked: RankedSummaries,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(out, "# Change summaries for `{}`\n", m.target_attribute);
        let _ = writeln!(
            out,
            "Source `{}`, target `{}`, key `{}`: {} rows, total absolute change {}.\n",
            m.source, m.target, m.key, m.rows, m.total_abs_change
        );
        let _ = writeln!(
            out,
            "{} candidates evaluated, {} skipped, alpha = {}.\n",
            self.ranked.evaluated,
            self.ranked.skipped.len(),
            self.ranked.config.alpha
        );
        out.push_str("| Rank | Score | Accuracy | Interpretability | Conditional transformations |\n");
        out.push_str("|---:|---:|---:|---:|---|\n");
        for (i, s) in self.ranked.entries.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {} | {:.4} | {:.4} | {:.4} | {} |",
                i + 1,
                s.score.score,
                s.score.accuracy,
                s.score.interpretability,
                ct_list(s).join("<br>")
            );
        }
        for (i, s) in self.ranked.entries.iter().enumerate() {
            let _ = writeln!(out, "\n## Rank {}\n", i + 1);
            let p = &s.provenance;
            let _ = writeln!(
                out,
                "Conditions over {:?}, transformations over {:?}, k = {}{}.\n",
                p.condition_attributes,
                p.transformation_attributes,
                p.k,
                if p.degenerate_split { " (degenerate split)" } else { "" }
            );
            let _ = writeln!(out, "```text\n{}```", s.to_tree().render());
        }
        out
    }
}

/// "condition → transformation" lines of a summary.
pub fn ct_list(s: &ChangeSummary) -> Vec<String> {
    s.cts
        .iter()
        .map(|ct| format!("{} → {}", ct.condition, ct.transformation.render(&s.target)))
        .collect()
}

pub fn shortlist_json(shortlist: &Shortlist) -> String {
    let mut s = serde_json::to_string_pretty(shortlist).expect("shortlist serializes");
    s.push('\n');
    s
}

pub fn shortlist_markdown(shortlist: &Shortlist) -> String {
    fn table(out: &mut String, title: &str, rows: &[AttributeScore]) {
        let _ = writeln!(out, "## {title}\n");
        out.push_str("| Attribute | Measure | Association | Below threshold |\n");
        out.push_str("|---|---|---:|---|\n");
        for a in rows {
            let measure = serde_json::to_value(a.measure).expect("measure serializes");
            let _ = writeln!(
                out,
                "| {} | {} | {:.4} | {} |",
                a.attribute,
                measure.as_str().unwrap_or_default(),
                a.association,
                if a.below_threshold { "yes" } else { "no" }
            );
        }
        out.push('\n');
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# Attribute shortlist for `{}` (threshold {})\n",
        shortlist.target, shortlist.threshold
    );
    table(&mut out, "Condition candidates", &shortlist.condition);
    table(&mut out, "Transformation candidates", &shortlist.transformation);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::{run_pipeline, shortlist_attributes, DiscoveryConfig};
    use crate::snapshot::{align, read_snapshot, LoadOptions};

    fn frame() -> Frame {
        let o = LoadOptions::new("name");
        let a = read_snapshot(include_str!("../data/employees_2016.csv").as_bytes(), &o).unwrap();
        let b = read_snapshot(include_str!("../data/employees_2017.csv").as_bytes(), &o).unwrap();
        Frame::new(&align(&a, &b, "name").unwrap(), "bonus").unwrap()
    }

    fn report(top_n: usize) -> Report {
        let f = frame();
        let cfg = DiscoveryConfig::new("bonus")
            .with_pools(["edu", "exp", "gen"], ["bonus", "salary"])
            .with_limits(2, 1)
            .with_top_n(top_n);
        Report {
            metadata: RunMetadata::new(&f, "a.csv", "b.csv"),
            ranked: run_pipeline(&f, &cfg).unwrap(),
        }
    }

    #[test]
    fn json_round_trips() {
        let r = report(5);
        assert_eq!(r.metadata.total_abs_change, "11480");
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn markdown_has_one_row_per_entry() {
        let r = report(3);
        let md = r.to_markdown();
        let rows = md
            .lines()
            .filter(|l| l.starts_with("| ") && !l.starts_with("| Rank"))
            .count();
        assert_eq!(rows, 3);
        assert!(md.contains("edu = PhD → new_bonus = 1.05 × old_bonus + 1000"));
    }

    #[test]
    fn shortlist_tables() {
        let s = shortlist_attributes(&frame(), 0.5).unwrap();
        let md = shortlist_markdown(&s);
        assert!(md.contains("| edu | eta |"));
        assert!(shortlist_json(&s).contains("\"below_threshold\""));
    }
}
