use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rust_decimal::prelude::FromPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::SummaryError;
use crate::frame::Frame;
use crate::stats::Role;

/// Affine model of the new target value over SOURCE attributes.
///
/// A term keyed by the target attribute itself reads its old value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTransformation {
    pub terms: BTreeMap<String, f64>,
    pub intercept: f64,
    pub identity: bool,
}

impl LinearTransformation {
    /// Zero coefficients are dropped; the identity flag is derived.
    pub fn new(terms: BTreeMap<String, f64>, intercept: f64, target: &str) -> Self {
        let terms: BTreeMap<String, f64> = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        let identity = intercept == 0.0 && terms.len() == 1 && terms.get(target) == Some(&1.0);
        LinearTransformation {
            terms,
            intercept,
            identity,
        }
    }

    /// The "no change" model.
    pub fn identity(target: &str) -> Self {
        LinearTransformation::new(BTreeMap::from([(target.to_string(), 1.0)]), 0.0, target)
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// Number of nonzero coefficients; identity counts as none.
    pub fn term_count(&self) -> usize {
        if self.identity {
            0
        } else {
            self.terms.len()
        }
    }

    /// Numeric constants and the grid role each is judged against.
    pub fn constants(&self, target: &str) -> Vec<(f64, Role)> {
        if self.identity {
            return Vec::new();
        }
        let mut out: Vec<(f64, Role)> = self
            .terms
            .iter()
            .map(|(a, c)| (*c, if a == target { Role::Rate } else { Role::Amount }))
            .collect();
        out.push((self.intercept, Role::Amount));
        out
    }

    /// Exact decimal prediction for one row.
    pub fn evaluate(&self, frame: &Frame, row: usize) -> Result<Decimal, SummaryError> {
        if self.identity {
            return Ok(frame.delta().old_values[row]);
        }
        let mut acc = to_decimal(self.intercept)?;
        for (attribute, coef) in &self.terms {
            let column = frame
                .numeric(attribute)
                .ok_or_else(|| SummaryError::MissingAttribute(attribute.clone()))?;
            let term = to_decimal(*coef)?
                .checked_mul(column.exact[row])
                .ok_or_else(|| SummaryError::Arithmetic(format!("overflow evaluating {attribute}")))?;
            acc = acc
                .checked_add(term)
                .ok_or_else(|| SummaryError::Arithmetic("overflow in prediction".into()))?;
        }
        Ok(acc)
    }

    /// `new_bonus = 1.05 × old_bonus + 1000`, or `None` for the identity.
    pub fn render(&self, target: &str) -> String {
        if self.identity {
            return "None".into();
        }
        let mut s = format!("new_{target} =");
        let mut first = true;
        for (attribute, coef) in &self.terms {
            let name = if attribute == target {
                format!("old_{target}")
            } else {
                attribute.clone()
            };
            let (sign, mag) = if *coef < 0.0 { ("-", -coef) } else { ("+", *coef) };
            match (first, sign) {
                (true, "-") => write!(s, " -{mag} × {name}"),
                (true, _) => write!(s, " {mag} × {name}"),
                (false, _) => write!(s, " {sign} {mag} × {name}"),
            }
            .unwrap();
            first = false;
        }
        if first {
            write!(s, " {}", self.intercept).unwrap();
        } else if self.intercept != 0.0 {
            let (sign, mag) = if self.intercept < 0.0 {
                ("-", -self.intercept)
            } else {
                ("+", self.intercept)
            };
            write!(s, " {sign} {mag}").unwrap();
        }
        s
    }
}

/// Decimal with the same shortest representation as `v`.
pub(crate) fn to_decimal(v: f64) -> Result<Decimal, SummaryError> {
    if !v.is_finite() {
        return Err(SummaryError::Arithmetic(format!("non-finite constant {v}")));
    }
    Decimal::from_str(&v.to_string())
        .ok()
        .or_else(|| Decimal::from_f64(v))
        .ok_or_else(|| SummaryError::Arithmetic(format!("constant {v} out of decimal range")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_flag_is_derived() {
        assert!(LinearTransformation::identity("bonus").is_identity());
        let t = LinearTransformation::new(BTreeMap::from([("bonus".into(), 1.0)]), 400.0, "bonus");
        assert!(!t.is_identity());
        let t = LinearTransformation::new(
            BTreeMap::from([("bonus".into(), 1.0), ("salary".into(), 0.0)]),
            0.0,
            "bonus",
        );
        assert!(t.is_identity());
        assert_eq!(t.term_count(), 0);
    }

    #[test]
    fn rendering() {
        let t = LinearTransformation::new(BTreeMap::from([("bonus".into(), 1.05)]), 1000.0, "bonus");
        assert_eq!(t.render("bonus"), "new_bonus = 1.05 × old_bonus + 1000");
        let t = LinearTransformation::new(
            BTreeMap::from([("bonus".into(), 1.0), ("salary".into(), -0.01)]),
            -50.0,
            "bonus",
        );
        assert_eq!(t.render("bonus"), "new_bonus = 1 × old_bonus - 0.01 × salary - 50");
        let t = LinearTransformation::new(BTreeMap::new(), 7.0, "bonus");
        assert_eq!(t.render("bonus"), "new_bonus = 7");
        assert_eq!(LinearTransformation::identity("bonus").render("bonus"), "None");
    }

    #[test]
    fn constant_roles() {
        let t = LinearTransformation::new(
            BTreeMap::from([("bonus".into(), 1.05), ("salary".into(), 0.1)]),
            1000.0,
            "bonus",
        );
        assert_eq!(
            t.constants("bonus"),
            [(1.05, Role::Rate), (0.1, Role::Amount), (1000.0, Role::Amount)]
        );
    }

    #[test]
    fn decimal_conversion_is_shortest_form() {
        assert_eq!(to_decimal(1.03).unwrap().to_string(), "1.03");
        assert_eq!(to_decimal(1000.0).unwrap().to_string(), "1000");
        assert!(to_decimal(f64::NAN).is_err());
    }
}
