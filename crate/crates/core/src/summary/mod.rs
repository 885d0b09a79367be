//! The explanation language: predicates, conditions, linear transformations
//! and change summaries, with scoring and linear-model-tree rendering.

mod predicate;
mod score;
mod transformation;
mod tree;

pub use predicate::{Condition, Predicate};
pub use score::{combine, interpretability, Interpretability, InterpretabilityWeights, ScoreBreakdown, Scoring};
pub use transformation::LinearTransformation;
pub use tree::{FlatRule, LinearModelTree, TreeNode};

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::Frame;
use crate::snapshot::AlignedPair;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SummaryError {
    #[error("rows matched by more than one condition, first at key `{key}` ({first} and {second})")]
    OverlappingConditions { key: String, first: String, second: String },
    #[error("attribute `{0}` is not present")]
    MissingAttribute(String),
    #[error("attribute `{attribute}` is {found}, which the predicate cannot test")]
    KindMismatch { attribute: String, found: &'static str },
    #[error("invalid condition: {0}")]
    InvalidCondition(String),
    #[error("invalid summary: {0}")]
    InvalidSummary(String),
    #[error("arithmetic error: {0}")]
    Arithmetic(String),
}

impl SummaryError {
    pub fn code(&self) -> &'static str {
        match self {
            SummaryError::OverlappingConditions { .. } => "OverlappingConditions",
            SummaryError::MissingAttribute(_) => "MissingAttribute",
            SummaryError::KindMismatch { .. } => "KindMismatch",
            SummaryError::InvalidCondition(_) => "InvalidCondition",
            SummaryError::InvalidSummary(_) => "InvalidSummary",
            SummaryError::Arithmetic(_) => "Arithmetic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTransformation {
    pub condition: Condition,
    pub transformation: LinearTransformation,
    /// Fraction of all rows matched by the condition.
    pub coverage: f64,
    /// Accuracy restricted to the matched rows.
    pub fit_accuracy: f64,
}

/// What happens to rows that match no CT.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultRule {
    #[default]
    Identity,
}

/// Which search candidate produced a summary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub condition_attributes: Vec<String>,
    pub transformation_attributes: Vec<String>,
    pub k: usize,
    /// The partition tree could not produce `k` leaves.
    #[serde(default)]
    pub degenerate_split: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeSummary {
    pub target: String,
    pub cts: Vec<ConditionalTransformation>,
    pub default_rule: DefaultRule,
    pub score: ScoreBreakdown,
    pub provenance: Provenance,
}

/// Which CT, if any, covers each row. Fails on the first doubly-covered row.
pub fn assign_rows(conditions: &[&Condition], frame: &Frame) -> Result<Vec<Option<usize>>, SummaryError> {
    let mut out: Vec<Option<usize>> = vec![None; frame.len()];
    for (row, slot) in out.iter_mut().enumerate() {
        for (i, c) in conditions.iter().enumerate() {
            if c.matches(frame, row)? {
                if let Some(prev) = *slot {
                    return Err(SummaryError::OverlappingConditions {
                        key: frame.keys()[row].clone(),
                        first: conditions[prev].to_string(),
                        second: c.to_string(),
                    });
                }
                *slot = Some(i);
            }
        }
    }
    Ok(out)
}

/// `1 − min(1, L1 / total)`, with the all-or-nothing rule when nothing changed.
fn accuracy_of(l1: Decimal, total: Decimal) -> f64 {
    if total.is_zero() {
        return if l1.is_zero() { 1.0 } else { 0.0 };
    }
    if l1.is_zero() {
        return 1.0;
    }
    let ratio = (l1 / total).min(Decimal::ONE);
    (Decimal::ONE - ratio).to_f64().unwrap_or(0.0).clamp(0.0, 1.0)
}

impl ChangeSummary {
    /// Assemble and score a summary from (condition, transformation) pairs.
    ///
    /// Identity pairs are folded into the default rule. An empty remainder
    /// becomes the single "nothing changed" CT over all rows.
    pub fn build(
        target: &str,
        rules: Vec<(Condition, LinearTransformation)>,
        frame: &Frame,
        provenance: Provenance,
        scoring: &Scoring,
    ) -> Result<ChangeSummary, SummaryError> {
        let mut rules: Vec<(Condition, LinearTransformation)> =
            rules.into_iter().filter(|(_, t)| !t.is_identity()).collect();
        if rules.is_empty() {
            rules.push((Condition::always(), LinearTransformation::identity(target)));
        }
        rules.sort_by(|a, b| a.0.cmp(&b.0));
        let conditions: Vec<&Condition> = rules.iter().map(|(c, _)| c).collect();
        let assignment = assign_rows(&conditions, frame)?;
        let n = frame.len();
        let delta = frame.delta();
        let mut cts = Vec::with_capacity(rules.len());
        for (i, (condition, transformation)) in rules.iter().enumerate() {
            let mut matched = 0usize;
            let mut l1 = Decimal::ZERO;
            let mut total = Decimal::ZERO;
            for row in (0..n).filter(|r| assignment[*r] == Some(i)) {
                matched += 1;
                let pred = transformation.evaluate(frame, row)?;
                l1 += (pred - delta.new_values[row]).abs();
                total += delta.delta[row].abs();
            }
            cts.push(ConditionalTransformation {
                condition: condition.clone(),
                transformation: transformation.clone(),
                coverage: if n == 0 { 0.0 } else { matched as f64 / n as f64 },
                fit_accuracy: accuracy_of(l1, total),
            });
        }
        let mut summary = ChangeSummary {
            target: target.to_string(),
            cts,
            default_rule: DefaultRule::Identity,
            score: ScoreBreakdown::new(
                1.0,
                Interpretability {
                    f_size: 1.0,
                    f_simplicity: 1.0,
                    f_coverage: 1.0,
                    f_normality: 1.0,
                    value: 1.0,
                },
                scoring.alpha,
            ),
            provenance,
        };
        summary.score = summary.evaluate(frame, scoring)?;
        Ok(summary)
    }

    pub fn conditions(&self) -> Vec<&Condition> {
        self.cts.iter().map(|ct| &ct.condition).collect()
    }

    /// Predicted new target values: the matching CT's transformation, or the
    /// old value for unmatched rows.
    pub fn apply(&self, frame: &Frame) -> Result<Vec<Decimal>, SummaryError> {
        self.check_target(frame)?;
        let assignment = assign_rows(&self.conditions(), frame)?;
        assignment
            .iter()
            .enumerate()
            .map(|(row, ct)| match ct {
                Some(i) => self.cts[*i].transformation.evaluate(frame, row),
                None => Ok(frame.delta().old_values[row]),
            })
            .collect()
    }

    fn check_target(&self, frame: &Frame) -> Result<(), SummaryError> {
        if frame.target() != self.target {
            return Err(SummaryError::InvalidSummary(format!(
                "summary explains `{}` but the frame targets `{}`",
                self.target,
                frame.target()
            )));
        }
        Ok(())
    }

    /// L1 distance between predicted and actual new values.
    pub fn l1_error(&self, frame: &Frame) -> Result<Decimal, SummaryError> {
        let pred = self.apply(frame)?;
        Ok(pred
            .iter()
            .zip(&frame.delta().new_values)
            .map(|(p, t)| (p - t).abs())
            .sum())
    }

    pub fn accuracy(&self, frame: &Frame) -> Result<f64, SummaryError> {
        Ok(accuracy_of(self.l1_error(frame)?, frame.delta().total_abs_change))
    }

    pub fn interpretability(&self, scoring: &Scoring) -> Interpretability {
        interpretability(&self.cts, &self.target, &scoring.grid, &scoring.weights)
    }

    /// Recompute the full breakdown against `frame`.
    pub fn evaluate(&self, frame: &Frame, scoring: &Scoring) -> Result<ScoreBreakdown, SummaryError> {
        let acc = self.accuracy(frame)?;
        Ok(ScoreBreakdown::new(acc, self.interpretability(scoring), scoring.alpha))
    }

    /// Canonical JSON of the CT set alone (conditions and transformations);
    /// used for deduplication and as the final ranking tie-break.
    pub fn ct_key(&self) -> String {
        let pairs: Vec<serde_json::Value> = self
            .cts
            .iter()
            .map(|ct| {
                serde_json::json!({
                    "condition": ct.condition,
                    "transformation": ct.transformation,
                })
            })
            .collect();
        serde_json::Value::Array(pairs).to_string()
    }

    /// Deterministic JSON: sorted keys, shortest round-trip floats, CTs in
    /// canonical condition order.
    pub fn canonical_json(&self) -> String {
        let mut s = self.clone();
        s.cts.sort_by(|a, b| a.condition.cmp(&b.condition));
        serde_json::to_value(&s).expect("summary serializes").to_string()
    }

    pub fn from_json(text: &str) -> Result<ChangeSummary, SummaryError> {
        let s: ChangeSummary = serde_json::from_str(text).map_err(|e| SummaryError::InvalidSummary(e.to_string()))?;
        if s.cts.is_empty() {
            return Err(SummaryError::InvalidSummary("a summary needs at least one CT".into()));
        }
        for ct in &s.cts {
            Condition::new(ct.condition.predicates().to_vec())?;
        }
        Ok(s)
    }

    pub fn to_tree(&self) -> LinearModelTree {
        LinearModelTree::from_summary(self)
    }

    pub fn non_identity_count(&self) -> usize {
        self.cts.iter().filter(|ct| !ct.transformation.is_identity()).count()
    }
}

/// [`ChangeSummary::apply`] over an aligned pair.
pub fn apply_summary(summary: &ChangeSummary, pair: &AlignedPair) -> crate::Result<Vec<Decimal>> {
    let frame = Frame::new(pair, &summary.target)?;
    Ok(summary.apply(&frame)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{align, read_snapshot, LoadOptions};
    use std::collections::BTreeMap;

    const Y2016: &str = include_str!("../../data/employees_2016.csv");
    const Y2017: &str = include_str!("../../data/employees_2017.csv");

    fn frame() -> Frame {
        let o = LoadOptions::new("name");
        let a = read_snapshot(Y2016.as_bytes(), &o).unwrap();
        let b = read_snapshot(Y2017.as_bytes(), &o).unwrap();
        Frame::new(&align(&a, &b, "name").unwrap(), "bonus").unwrap()
    }

    fn rate(r: f64, b: f64) -> LinearTransformation {
        LinearTransformation::new(BTreeMap::from([("bonus".to_string(), r)]), b, "bonus")
    }

    fn golden_rules() -> Vec<(Condition, LinearTransformation)> {
        vec![
            (
                Condition::new(vec![Predicate::equals("edu", "PhD")]).unwrap(),
                rate(1.05, 1000.0),
            ),
            (
                Condition::new(vec![Predicate::equals("edu", "MS"), Predicate::at_least("exp", 3.0)]).unwrap(),
                rate(1.04, 800.0),
            ),
            (
                Condition::new(vec![Predicate::equals("edu", "MS"), Predicate::less_than("exp", 3.0)]).unwrap(),
                rate(1.03, 400.0),
            ),
        ]
    }

    fn golden(f: &Frame) -> ChangeSummary {
        ChangeSummary::build("bonus", golden_rules(), f, Provenance::default(), &Scoring::default()).unwrap()
    }

    fn row(f: &Frame, name: &str) -> usize {
        f.keys().iter().position(|k| k == name).unwrap()
    }

    #[test]
    fn golden_replays_every_cell() {
        let f = frame();
        let s = golden(&f);
        let pred = s.apply(&f).unwrap();
        assert_eq!(pred, f.delta().new_values);
        assert_eq!(pred[row(&f, "Anne")], Decimal::from(25150));
        assert_eq!(pred[row(&f, "Cathy")], Decimal::from(11000));
        assert_eq!(s.score.accuracy, 1.0);
    }

    #[test]
    fn golden_interpretability() {
        let f = frame();
        let s = golden(&f);
        let b = s.score;
        assert!((b.f_size - 1.0 / 3.0).abs() < 1e-15);
        assert!((b.f_simplicity - 5.0 / 18.0).abs() < 1e-15);
        assert!((b.f_coverage - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(b.f_normality, 1.0);
        assert!((b.interpretability - 43.0 / 72.0).abs() < 1e-12);
        assert!((b.score - (0.5 + 0.5 * 43.0 / 72.0)).abs() < 1e-12);
    }

    #[test]
    fn partial_summary_accuracy() {
        let f = frame();
        // exact for Anne and Frank only, identity elsewhere
        let rules = vec![
            (
                Condition::new(vec![
                    Predicate::at_least("salary", 230000.0),
                    Predicate::less_than("salary", 230001.0),
                ])
                .unwrap(),
                rate(1.05, 1000.0),
            ),
            (
                Condition::new(vec![
                    Predicate::at_least("salary", 210000.0),
                    Predicate::less_than("salary", 210001.0),
                ])
                .unwrap(),
                rate(1.05, 1000.0),
            ),
        ];
        let s = ChangeSummary::build("bonus", rules, &f, Provenance::default(), &Scoring::default()).unwrap();
        assert!((s.score.accuracy - 4200.0 / 11480.0).abs() < 1e-12);
    }

    #[test]
    fn identity_summary() {
        let f = frame();
        let s = ChangeSummary::build("bonus", vec![], &f, Provenance::default(), &Scoring::default()).unwrap();
        assert_eq!(s.cts.len(), 1);
        assert!(s.cts[0].condition.is_empty());
        assert_eq!(s.apply(&f).unwrap(), f.delta().old_values);
        assert_eq!(s.score.accuracy, 0.0);
        assert_eq!(s.score.interpretability, 1.0);
    }

    #[test]
    fn overlap_detected() {
        let f = frame();
        let rules = vec![
            (
                Condition::new(vec![Predicate::equals("edu", "PhD")]).unwrap(),
                rate(1.05, 1000.0),
            ),
            (
                Condition::new(vec![Predicate::equals("gen", "M")]).unwrap(),
                rate(1.0, 50.0),
            ),
        ];
        let err = ChangeSummary::build("bonus", rules, &f, Provenance::default(), &Scoring::default()).unwrap_err();
        assert!(
            matches!(err, SummaryError::OverlappingConditions { ref key, .. } if key == "Bob"),
            "{err}"
        );
    }

    #[test]
    fn missing_and_mistyped_attributes() {
        let f = frame();
        let rules = vec![(
            Condition::new(vec![Predicate::equals("dept", "x")]).unwrap(),
            rate(1.0, 50.0),
        )];
        assert!(matches!(
            ChangeSummary::build("bonus", rules, &f, Provenance::default(), &Scoring::default()),
            Err(SummaryError::MissingAttribute(_))
        ));
        let rules = vec![(
            Condition::new(vec![Predicate::less_than("edu", 3.0)]).unwrap(),
            rate(1.0, 50.0),
        )];
        assert!(matches!(
            ChangeSummary::build("bonus", rules, &f, Provenance::default(), &Scoring::default()),
            Err(SummaryError::KindMismatch { .. })
        ));
    }

    #[test]
    fn canonical_json_round_trips_and_ignores_ct_order() {
        let f = frame();
        let s = golden(&f);
        let text = s.canonical_json();
        assert_eq!(text, s.canonical_json());
        let back = ChangeSummary::from_json(&text).unwrap();
        assert_eq!(back, s);
        let mut shuffled = s.clone();
        shuffled.cts.reverse();
        assert_eq!(shuffled.canonical_json(), text);
        assert!(text.contains(r#""intercept":1000.0"#));
    }

    #[test]
    fn second_term_lowers_simplicity() {
        let f = frame();
        let base = golden(&f);
        let mut rules = golden_rules();
        rules[0].1 = LinearTransformation::new(
            BTreeMap::from([("bonus".to_string(), 1.05), ("salary".to_string(), 1e-9)]),
            1000.0,
            "bonus",
        );
        let s = ChangeSummary::build("bonus", rules, &f, Provenance::default(), &Scoring::default()).unwrap();
        assert!(s.score.f_simplicity < base.score.f_simplicity);
        assert!(s.score.interpretability < base.score.interpretability);
    }

    #[test]
    fn removing_a_ct_raises_size_and_lowers_coverage() {
        let f = frame();
        let base = golden(&f);
        let mut rules = golden_rules();
        rules.pop();
        let s = ChangeSummary::build("bonus", rules, &f, Provenance::default(), &Scoring::default()).unwrap();
        assert!(s.score.f_size > base.score.f_size);
        assert!(s.score.f_coverage <= base.score.f_coverage);
    }
}
