//! Response payloads built from engine types.

use serde::{Deserialize, Serialize};

use chardiff::discovery::RankedSummaries;
use chardiff::frame::Frame;
use chardiff::summary::{assign_rows, ChangeSummary, Predicate, Provenance, ScoreBreakdown, SummaryError};

/// A rendered condition, tagged so the UI can style it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionView {
    pub kind: String,
    pub text: String,
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationView {
    pub kind: String,
    pub text: String,
    pub terms: std::collections::BTreeMap<String, f64>,
    pub intercept: f64,
    pub identity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtView {
    pub condition: ConditionView,
    pub transformation: TransformationView,
    pub coverage: f64,
    pub fit_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryView {
    /// 1-based.
    pub rank: usize,
    pub score: ScoreBreakdown,
    pub cts: Vec<CtView>,
    pub provenance: Provenance,
    /// Linear model tree, one node per line.
    pub tree: String,
}

impl SummaryView {
    pub fn new(rank: usize, s: &ChangeSummary) -> Self {
        SummaryView {
            rank,
            score: s.score,
            cts: s
                .cts
                .iter()
                .map(|ct| CtView {
                    condition: ConditionView {
                        kind: "condition".into(),
                        text: ct.condition.to_string(),
                        predicates: ct.condition.predicates().to_vec(),
                    },
                    transformation: TransformationView {
                        kind: "transformation".into(),
                        text: ct.transformation.render(&s.target),
                        terms: ct.transformation.terms.clone(),
                        intercept: ct.transformation.intercept,
                        identity: ct.transformation.is_identity(),
                    },
                    coverage: ct.coverage,
                    fit_accuracy: ct.fit_accuracy,
                })
                .collect(),
            provenance: s.provenance.clone(),
            tree: s.to_tree().render(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunView {
    pub run_id: String,
    pub target: String,
    pub cond_pool: Vec<String>,
    pub tran_pool: Vec<String>,
    pub evaluated: usize,
    pub skipped: usize,
    pub summaries: Vec<SummaryView>,
}

impl RunView {
    pub fn new(run_id: &str, ranked: &RankedSummaries) -> Self {
        RunView {
            run_id: run_id.to_string(),
            target: ranked.config.target.clone(),
            cond_pool: ranked.config.cond_pool.clone(),
            tran_pool: ranked.config.tran_pool.clone(),
            evaluated: ranked.evaluated,
            skipped: ranked.skipped.len(),
            summaries: ranked
                .entries
                .iter()
                .enumerate()
                .map(|(i, s)| SummaryView::new(i + 1, s))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionView {
    pub condition: String,
    pub coverage_percent: f64,
    pub fit_accuracy: f64,
    /// The summary predicts a change for these rows.
    pub changed: bool,
    pub rectangle: Rect,
}

/// Label of the strip holding rows that no CT covers.
pub const UNCOVERED: &str = "no matching condition";

/// One full-width strip per partition, tallest first, stacked from the top of
/// the unit square. Rows matched by no CT form their own unchanged strip.
pub fn partition_views(summary: &ChangeSummary, frame: &Frame) -> Result<Vec<PartitionView>, SummaryError> {
    let n = frame.len();
    let assignment = assign_rows(&summary.conditions(), frame)?;
    let mut counts = vec![0usize; summary.cts.len()];
    let mut uncovered = Vec::new();
    for (row, a) in assignment.iter().enumerate() {
        match a {
            Some(i) => counts[*i] += 1,
            None => uncovered.push(row),
        }
    }
    let mut strips: Vec<(usize, String, f64, bool)> = summary
        .cts
        .iter()
        .zip(&counts)
        .map(|(ct, c)| {
            (
                *c,
                ct.condition.to_string(),
                ct.fit_accuracy,
                !ct.transformation.is_identity(),
            )
        })
        .collect();
    if !uncovered.is_empty() {
        let delta = &frame.delta().delta;
        let unchanged = uncovered.iter().all(|r| delta[*r].is_zero());
        strips.push((
            uncovered.len(),
            UNCOVERED.to_string(),
            if unchanged { 1.0 } else { 0.0 },
            false,
        ));
    }
    strips.sort_by_key(|s| std::cmp::Reverse(s.0));

    let mut y = 0.0;
    let last = strips.len().saturating_sub(1);
    Ok(strips
        .into_iter()
        .enumerate()
        .map(|(i, (count, condition, fit_accuracy, changed))| {
            let fraction = if n == 0 { 0.0 } else { count as f64 / n as f64 };
            let height = if i == last { 1.0 - y } else { fraction };
            let view = PartitionView {
                condition,
                coverage_percent: 100.0 * fraction,
                fit_accuracy,
                changed,
                rectangle: Rect {
                    x: 0.0,
                    y,
                    width: 1.0,
                    height,
                },
            };
            y += height;
            view
        })
        .collect())
}
