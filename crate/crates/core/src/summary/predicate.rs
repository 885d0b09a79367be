use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SummaryError;
use crate::frame::{Column, Frame};

/// Atomic descriptor over one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Predicate {
    Equals { attribute: String, value: String },
    LessThan { attribute: String, threshold: f64 },
    AtLeast { attribute: String, threshold: f64 },
}

impl Eq for Predicate {}

impl Predicate {
    pub fn equals(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Predicate::Equals {
            attribute: attribute.into(),
            value: value.into(),
        }
    }

    pub fn less_than(attribute: impl Into<String>, threshold: f64) -> Self {
        Predicate::LessThan {
            attribute: attribute.into(),
            threshold,
        }
    }

    pub fn at_least(attribute: impl Into<String>, threshold: f64) -> Self {
        Predicate::AtLeast {
            attribute: attribute.into(),
            threshold,
        }
    }

    pub fn attribute(&self) -> &str {
        match self {
            Predicate::Equals { attribute, .. }
            | Predicate::LessThan { attribute, .. }
            | Predicate::AtLeast { attribute, .. } => attribute,
        }
    }

    pub fn threshold(&self) -> Option<f64> {
        match self {
            Predicate::Equals { .. } => None,
            Predicate::LessThan { threshold, .. } | Predicate::AtLeast { threshold, .. } => Some(*threshold),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Predicate::Equals { .. } => 0,
            Predicate::LessThan { .. } => 1,
            Predicate::AtLeast { .. } => 2,
        }
    }

    /// Whether row `row` of `frame` satisfies the predicate.
    pub fn matches(&self, frame: &Frame, row: usize) -> Result<bool, SummaryError> {
        let column = frame
            .column(self.attribute())
            .ok_or_else(|| SummaryError::MissingAttribute(self.attribute().to_string()))?;
        match (self, column) {
            (Predicate::Equals { value, .. }, Column::Categorical(c)) => Ok(c[row] == *value),
            (Predicate::LessThan { threshold, .. }, Column::Numeric(c)) => {
                Ok(c.raw[row].is_some_and(|v| v < *threshold))
            }
            (Predicate::AtLeast { threshold, .. }, Column::Numeric(c)) => {
                Ok(c.raw[row].is_some_and(|v| v >= *threshold))
            }
            (p, c) => Err(SummaryError::KindMismatch {
                attribute: p.attribute().to_string(),
                found: c.kind_name(),
            }),
        }
    }
}

impl Ord for Predicate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.attribute()
            .cmp(other.attribute())
            .then(self.rank().cmp(&other.rank()))
            .then_with(|| match (self, other) {
                (Predicate::Equals { value: a, .. }, Predicate::Equals { value: b, .. }) => a.cmp(b),
                _ => {
                    let a = self.threshold().unwrap_or(0.0);
                    let b = other.threshold().unwrap_or(0.0);
                    a.total_cmp(&b)
                }
            })
    }
}

impl PartialOrd for Predicate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Equals { attribute, value } => write!(f, "{attribute} = {value}"),
            Predicate::LessThan { attribute, threshold } => write!(f, "{attribute} < {threshold}"),
            Predicate::AtLeast { attribute, threshold } => write!(f, "{attribute} ≥ {threshold}"),
        }
    }
}

/// Conjunction of predicates. The empty condition matches every row.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Condition {
    predicates: Vec<Predicate>,
}

impl Condition {
    pub fn always() -> Self {
        Condition::default()
    }

    /// Build a condition in canonical predicate order, rejecting contradictory
    /// or redundant descriptors.
    pub fn new(mut predicates: Vec<Predicate>) -> Result<Self, SummaryError> {
        predicates.sort();
        let mut seen: BTreeMap<(&str, u8), usize> = BTreeMap::new();
        for p in &predicates {
            let slot = seen.entry((p.attribute(), p.rank())).or_default();
            *slot += 1;
            if *slot > 1 {
                return Err(SummaryError::InvalidCondition(format!(
                    "more than one {} predicate on `{}`",
                    ["equals", "less-than", "at-least"][p.rank() as usize],
                    p.attribute()
                )));
            }
        }
        for p in &predicates {
            if let Predicate::LessThan { attribute, threshold } = p {
                let lower = predicates.iter().find_map(|q| match q {
                    Predicate::AtLeast {
                        attribute: a,
                        threshold: t,
                    } if a == attribute => Some(*t),
                    _ => None,
                });
                if lower.is_some_and(|lo| *threshold <= lo) {
                    return Err(SummaryError::InvalidCondition(format!(
                        "empty range on `{attribute}`: < {threshold} and ≥ {}",
                        lower.unwrap()
                    )));
                }
            }
            if p.threshold().is_some_and(|t| !t.is_finite()) {
                return Err(SummaryError::InvalidCondition(format!(
                    "non-finite threshold on `{}`",
                    p.attribute()
                )));
            }
        }
        let mixed = predicates.iter().any(|p| {
            matches!(p, Predicate::Equals { .. })
                && predicates
                    .iter()
                    .any(|q| q.attribute() == p.attribute() && q.threshold().is_some())
        });
        if mixed {
            return Err(SummaryError::InvalidCondition(
                "an attribute cannot carry both equality and threshold predicates".into(),
            ));
        }
        Ok(Condition { predicates })
    }

    /// Conjunction of a root-to-leaf path; repeated thresholds on one attribute
    /// collapse to the tightest bound.
    pub fn from_path(path: &[Predicate]) -> Result<Self, SummaryError> {
        let mut upper: BTreeMap<&str, f64> = BTreeMap::new();
        let mut lower: BTreeMap<&str, f64> = BTreeMap::new();
        let mut out = Vec::new();
        for p in path {
            match p {
                Predicate::Equals { .. } => out.push(p.clone()),
                Predicate::LessThan { attribute, threshold } => {
                    let e = upper.entry(attribute).or_insert(*threshold);
                    *e = e.min(*threshold);
                }
                Predicate::AtLeast { attribute, threshold } => {
                    let e = lower.entry(attribute).or_insert(*threshold);
                    *e = e.max(*threshold);
                }
            }
        }
        out.extend(upper.into_iter().map(|(a, t)| Predicate::less_than(a, t)));
        out.extend(lower.into_iter().map(|(a, t)| Predicate::at_least(a, t)));
        Condition::new(out)
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn descriptor_count(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn matches(&self, frame: &Frame, row: usize) -> Result<bool, SummaryError> {
        for p in &self.predicates {
            if !p.matches(frame, row)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.predicates.iter().map(|p| p.attribute())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.predicates.is_empty() {
            return f.write_str("all rows");
        }
        for (i, p) in self.predicates.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order() {
        let c = Condition::new(vec![
            Predicate::at_least("exp", 3.0),
            Predicate::equals("edu", "MS"),
            Predicate::less_than("exp", 9.0),
        ])
        .unwrap();
        assert_eq!(c.to_string(), "edu = MS ∧ exp < 9 ∧ exp ≥ 3");
        assert_eq!(c.descriptor_count(), 3);
    }

    #[test]
    fn rejects_invalid_conjunctions() {
        assert!(Condition::new(vec![Predicate::equals("a", "x"), Predicate::equals("a", "y")]).is_err());
        assert!(Condition::new(vec![Predicate::less_than("a", 3.0), Predicate::at_least("a", 3.0)]).is_err());
        assert!(Condition::new(vec![Predicate::less_than("a", 3.0), Predicate::less_than("a", 2.0)]).is_err());
        assert!(Condition::new(vec![Predicate::equals("a", "x"), Predicate::less_than("a", 2.0)]).is_err());
        assert!(Condition::new(vec![Predicate::less_than("a", f64::NAN)]).is_err());
    }

    #[test]
    fn path_collapses_bounds() {
        let c = Condition::from_path(&[
            Predicate::less_than("x", 9.0),
            Predicate::at_least("x", 2.0),
            Predicate::less_than("x", 5.0),
            Predicate::equals("g", "a"),
        ])
        .unwrap();
        assert_eq!(c.to_string(), "g = a ∧ x < 5 ∧ x ≥ 2");
    }

    #[test]
    fn serde_shape() {
        let p = Predicate::less_than("exp", 3.0);
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"op":"less_than","attribute":"exp","threshold":3.0}"#
        );
        let back: Predicate = serde_json::from_str(r#"{"attribute":"edu","op":"equals","value":"PhD"}"#).unwrap();
        assert_eq!(back, Predicate::equals("edu", "PhD"));
    }
}
