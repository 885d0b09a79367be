use std::str::FromStr;

use rust_decimal::prelude::{FromPrimitive, ToPrimitive};
use rust_decimal::{Decimal, RoundingStrategy};
use serde::{Deserialize, Serialize};

/// Grid of "round" values per constant role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityGrid {
    pub rate_step: f64,
    pub amount_step: f64,
    pub threshold_step: f64,
    pub tolerance: f64,
    pub max_digits: u32,
}

impl Default for NormalityGrid {
    fn default() -> Self {
        NormalityGrid {
            rate_step: 0.01,
            amount_step: 50.0,
            threshold_step: 1.0,
            tolerance: 1e-9,
            max_digits: 4,
        }
    }
}

impl NormalityGrid {
    pub fn step(&self, role: Role) -> f64 {
        match role {
            Role::Rate => self.rate_step,
            Role::Amount => self.amount_step,
            Role::Threshold => self.threshold_step,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("rate_step", self.rate_step),
            ("amount_step", self.amount_step),
            ("threshold_step", self.threshold_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be a positive number, got {v}"));
            }
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(format!("tolerance must be >= 0, got {}", self.tolerance));
        }
        if self.max_digits == 0 {
            return Err("max_digits must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Multiplier on the old value of the target.
    Rate,
    /// Any other coefficient, and intercepts.
    Amount,
    /// Numeric condition threshold.
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapped {
    pub snapped: f64,
    pub normality: f64,
}

fn to_decimal(v: f64) -> Option<Decimal> {
    Decimal::from_str(&v.to_string()).ok().or_else(|| Decimal::from_f64(v))
}

/// Nearest grid multiple for `role`, computed in decimal so that `1.05` stays
/// `1.05`. Midpoints round away from zero.
fn nearest_multiple(value: f64, step: f64) -> f64 {
    let exact = to_decimal(value).zip(to_decimal(step)).and_then(|(v, s)| {
        let q = v
            .checked_div(s)?
            .round_dp_with_strategy(0, RoundingStrategy::MidpointAwayFromZero);
        q.checked_mul(s)?.to_f64()
    });
    exact.unwrap_or_else(|| (value / step).round() * step)
}

/// Index of the grid multiple nearest `value`, midpoints away from zero.
pub fn grid_index(value: f64, step: f64) -> i64 {
    let exact = to_decimal(value).zip(to_decimal(step)).and_then(|(v, s)| {
        v.checked_div(s)?
            .round_dp_with_strategy(0, RoundingStrategy::MidpointAwayFromZero)
            .to_i64()
    });
    exact.unwrap_or_else(|| (value / step).round() as i64)
}

/// `index · step`, computed in decimal.
pub fn grid_point(index: i64, step: f64) -> f64 {
    to_decimal(step)
        .and_then(|s| s.checked_mul(Decimal::from(index)))
        .and_then(|d| d.to_f64())
        .unwrap_or(index as f64 * step)
}

/// Number of significant decimal digits in the shortest round-trip form of `v`.
pub fn significant_digits(v: f64) -> u32 {
    let s = format!("{:e}", v.abs());
    let mantissa = s.split('e').next().unwrap_or("");
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let trimmed = digits.trim_start_matches('0').trim_end_matches('0');
    trimmed.len().max(1) as u32
}

/// Snap `value` to the grid for `role` and score how "round" it already was.
///
/// Normality is 1 when the value sits on the grid within the relative
/// tolerance; otherwise it degrades with the number of significant digits.
pub fn snap(value: f64, role: Role, grid: &NormalityGrid) -> Snapped {
    if !value.is_finite() {
        return Snapped {
            snapped: value,
            normality: 0.0,
        };
    }
    let snapped = nearest_multiple(value, grid.step(role));
    let on_grid = (value - snapped).abs() <= grid.tolerance * value.abs().max(1.0);
    let normality = if on_grid {
        1.0
    } else {
        let d = significant_digits(value).min(grid.max_digits);
        (1.0 - d as f64 / grid.max_digits as f64).max(0.0)
    };
    Snapped { snapped, normality }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g() -> NormalityGrid {
        NormalityGrid::default()
    }

    #[test]
    fn round_constants_are_normal() {
        assert_eq!(
            snap(1.05, Role::Rate, &g()),
            Snapped {
                snapped: 1.05,
                normality: 1.0
            }
        );
        assert_eq!(snap(1000.0, Role::Amount, &g()).normality, 1.0);
        assert_eq!(snap(3.0, Role::Threshold, &g()).normality, 1.0);
    }

    #[test]
    fn ragged_rate_is_not() {
        let s = snap(0.02479, Role::Rate, &g());
        assert_eq!(s.normality, 0.0);
        assert_eq!(s.snapped, 0.02);
    }

    #[test]
    fn graded_digits() {
        assert_eq!(significant_digits(0.02479), 4);
        assert_eq!(significant_digits(1000.0), 1);
        assert_eq!(significant_digits(23.5), 3);
        // 23.5 is off the threshold grid: 1 - 3/4
        assert_eq!(snap(23.5, Role::Threshold, &g()).normality, 0.25);
        assert_eq!(snap(0.1, Role::Amount, &g()).normality, 0.75);
    }

    #[test]
    fn midpoints_round_away_from_zero() {
        assert_eq!(snap(2.5, Role::Threshold, &g()).snapped, 3.0);
        assert_eq!(snap(-2.5, Role::Threshold, &g()).snapped, -3.0);
        assert_eq!(snap(1.045, Role::Rate, &g()).snapped, 1.05);
        assert_eq!(snap(425.0, Role::Amount, &g()).snapped, 450.0);
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(grid_index(1.045, 0.01), 105);
        assert_eq!(grid_point(103, 0.01), 1.03);
        assert_eq!(grid_index(-75.0, 50.0), -2);
        assert_eq!(grid_point(-2, 50.0), -100.0);
    }

    #[test]
    fn tolerance_is_relative() {
        assert_eq!(snap(1000.0 + 1e-7, Role::Amount, &g()).normality, 1.0);
        assert!(snap(1000.01, Role::Amount, &g()).normality < 1.0);
    }

    proptest! {
        #[test]
        fn snapping_is_idempotent(v in -1e7f64..1e7, role in prop::sample::select(vec![Role::Rate, Role::Amount, Role::Threshold])) {
            let once = snap(v, role, &g());
            let twice = snap(once.snapped, role, &g());
            prop_assert_eq!(twice.snapped, once.snapped);
            prop_assert_eq!(twice.normality, 1.0);
            prop_assert!((0.0..=1.0).contains(&once.normality));
        }
    }
}
