use serde::{Deserialize, Serialize};

use super::ConditionalTransformation;
use crate::stats::{snap, NormalityGrid, Role};

/// Weights of (size, simplicity, coverage, normality) in interpretability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpretabilityWeights {
    pub size: f64,
    pub simplicity: f64,
    pub coverage: f64,
    pub normality: f64,
}

impl Default for InterpretabilityWeights {
    fn default() -> Self {
        InterpretabilityWeights {
            size: 0.25,
            simplicity: 0.25,
            coverage: 0.25,
            normality: 0.25,
        }
    }
}

impl InterpretabilityWeights {
    pub fn as_array(&self) -> [f64; 4] {
        [self.size, self.simplicity, self.coverage, self.normality]
    }

    pub fn validate(&self) -> Result<(), String> {
        let w = self.as_array();
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(format!("weights must be non-negative, got {w:?}"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(format!("weights must sum to 1, got {sum}"));
        }
        Ok(())
    }
}

/// Scoring knobs shared by every summary in one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scoring {
    pub alpha: f64,
    pub grid: NormalityGrid,
    pub weights: InterpretabilityWeights,
}

impl Default for Scoring {
    fn default() -> Self {
        Scoring {
            alpha: 0.5,
            grid: NormalityGrid::default(),
            weights: InterpretabilityWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub accuracy: f64,
    pub interpretability: f64,
    pub f_size: f64,
    pub f_simplicity: f64,
    pub f_coverage: f64,
    pub f_normality: f64,
    pub alpha: f64,
    pub score: f64,
}

/// The four interpretability factors and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interpretability {
    pub f_size: f64,
    pub f_simplicity: f64,
    pub f_coverage: f64,
    pub f_normality: f64,
    pub value: f64,
}

/// `alpha·accuracy + (1 − alpha)·interpretability`.
pub fn combine(alpha: f64, accuracy: f64, interpretability: f64) -> f64 {
    alpha * accuracy + (1.0 - alpha) * interpretability
}

impl ScoreBreakdown {
    pub fn new(accuracy: f64, parts: Interpretability, alpha: f64) -> Self {
        ScoreBreakdown {
            accuracy,
            interpretability: parts.value,
            f_size: parts.f_size,
            f_simplicity: parts.f_simplicity,
            f_coverage: parts.f_coverage,
            f_normality: parts.f_normality,
            alpha,
            score: combine(alpha, accuracy, parts.value),
        }
    }

    /// Same components re-weighted for a different `alpha`.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        ScoreBreakdown {
            alpha,
            score: combine(alpha, self.accuracy, self.interpretability),
            ..*self
        }
    }
}

/// Interpretability of a CT set.
///
/// Empty sets and sets without numeric constants have normality 1.
pub fn interpretability(
    cts: &[ConditionalTransformation],
    target: &str,
    grid: &NormalityGrid,
    weights: &InterpretabilityWeights,
) -> Interpretability {
    let n = cts.len();
    let f_size = if n == 0 { 1.0 } else { 1.0 / n as f64 };
    let f_simplicity = if n == 0 {
        1.0
    } else {
        cts.iter()
            .map(|ct| 1.0 / (1 + ct.condition.descriptor_count() + ct.transformation.term_count()) as f64)
            .sum::<f64>()
            / n as f64
    };
    let f_coverage = cts.iter().map(|ct| ct.coverage).sum::<f64>().min(1.0);
    let mut constants: Vec<(f64, Role)> = Vec::new();
    for ct in cts {
        constants.extend(
            ct.condition
                .predicates()
                .iter()
                .filter_map(|p| p.threshold())
                .map(|t| (t, Role::Threshold)),
        );
        constants.extend(ct.transformation.constants(target));
    }
    let f_normality = if constants.is_empty() {
        1.0
    } else {
        constants.iter().map(|(v, r)| snap(*v, *r, grid).normality).sum::<f64>() / constants.len() as f64
    };
    let w = weights.as_array();
    let value = w[0] * f_size + w[1] * f_simplicity + w[2] * f_coverage + w[3] * f_normality;
    Interpretability {
        f_size,
        f_simplicity,
        f_coverage,
        f_normality,
        value: value.clamp(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alpha_endpoints() {
        assert_eq!(combine(1.0, 0.3, 0.9), 0.3);
        assert_eq!(combine(0.0, 0.3, 0.9), 0.9);
    }

    #[test]
    fn weights_validate() {
        assert!(InterpretabilityWeights::default().validate().is_ok());
        let bad = InterpretabilityWeights {
            size: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn score_is_affine_in_alpha(acc in 0.0f64..=1.0, int in 0.0f64..=1.0, a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let parts = Interpretability { f_size: 1.0, f_simplicity: 1.0, f_coverage: 1.0, f_normality: 1.0, value: int };
            let sa = ScoreBreakdown::new(acc, parts, a);
            let sb = sa.with_alpha(b);
            prop_assert_eq!(sa.score, a * acc + (1.0 - a) * int);
            prop_assert_eq!(sb.score, b * acc + (1.0 - b) * int);
            prop_assert!((0.0..=1.0 + 1e-15).contains(&sa.score));
        }
    }
}
