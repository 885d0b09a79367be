use serde::{Deserialize, Serialize};

use super::DiscoveryError;
use crate::frame::{Column, Frame, MAX_REGRESSOR_NULL_FRACTION};
use crate::stats::{correlation_ratio, pearson};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// |Pearson r|, numeric attributes.
    Pearson,
    /// Correlation ratio, categorical attributes.
    Eta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeScore {
    pub attribute: String,
    pub measure: Measure,
    pub association: f64,
    pub below_threshold: bool,
}

/// Attributes ranked by association with the change of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortlist {
    pub target: String,
    pub threshold: f64,
    pub condition: Vec<AttributeScore>,
    pub transformation: Vec<AttributeScore>,
}

impl Shortlist {
    /// Top `c` condition and top `t` transformation attributes, regardless of threshold.
    pub fn default_pools(&self, c: usize, t: usize) -> (Vec<String>, Vec<String>) {
        (
            self.condition.iter().take(c).map(|a| a.attribute.clone()).collect(),
            self.transformation
                .iter()
                .take(t)
                .map(|a| a.attribute.clone())
                .collect(),
        )
    }
}

/// Score every non-key attribute against the target delta (new − old), using
/// SOURCE values. The target's old value is a transformation candidate but not
/// a condition candidate; regressors with too many nulls are left out.
pub fn shortlist_attributes(frame: &Frame, threshold: f64) -> Result<Shortlist, DiscoveryError> {
    if !threshold.is_finite() {
        return Err(DiscoveryError::InvalidConfig(format!(
            "threshold must be finite, got {threshold}"
        )));
    }
    let delta = frame.delta_f64();
    let enough = frame.len() >= 2;
    let score = |attribute: &str, measure: Measure, association: f64| AttributeScore {
        attribute: attribute.to_string(),
        measure,
        association,
        below_threshold: association <= threshold,
    };
    let mut condition = Vec::new();
    let mut transformation = Vec::new();
    for name in frame.attributes() {
        match frame.column(name).expect("listed attribute") {
            Column::Categorical(values) => {
                let eta = if enough {
                    correlation_ratio(values, &delta)?
                } else {
                    0.0
                };
                condition.push(score(name, Measure::Eta, eta));
            }
            Column::Numeric(col) => {
                let r = if enough {
                    pearson(&col.values, &delta)?.abs()
                } else {
                    0.0
                };
                if name != frame.target() {
                    condition.push(score(name, Measure::Pearson, r));
                }
                if frame.null_fraction(name).unwrap_or(0.0) <= MAX_REGRESSOR_NULL_FRACTION {
                    transformation.push(score(name, Measure::Pearson, r));
                }
            }
        }
    }
    let order = |a: &AttributeScore, b: &AttributeScore| {
        b.association
            .total_cmp(&a.association)
            .then_with(|| a.attribute.cmp(&b.attribute))
    };
    condition.sort_by(order);
    transformation.sort_by(order);
    Ok(Shortlist {
        target: frame.target().to_string(),
        threshold,
        condition,
        transformation,
    })
}
