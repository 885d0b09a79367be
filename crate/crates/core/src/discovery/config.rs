use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DiscoveryError;
use crate::frame::Frame;
use crate::stats::NormalityGrid;
use crate::summary::{InterpretabilityWeights, Scoring};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub target: String,
    /// Condition attribute pool.
    pub cond_pool: Vec<String>,
    /// Transformation attribute pool. The target's old value is always added.
    pub tran_pool: Vec<String>,
    /// Maximum number of condition attributes per candidate.
    pub c: usize,
    /// Maximum number of transformation attributes per candidate.
    pub t: usize,
    pub alpha: f64,
    pub k_max: usize,
    pub top_n: usize,
    pub correlation_threshold: f64,
    pub grid: NormalityGrid,
    pub weights: InterpretabilityWeights,
    pub seed: u64,
    /// Worker threads for candidate evaluation; `None` uses the global pool.
    /// Output does not depend on it.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl DiscoveryConfig {
    pub fn new(target: impl Into<String>) -> Self {
        DiscoveryConfig {
            target: target.into(),
            cond_pool: Vec::new(),
            tran_pool: Vec::new(),
            c: 3,
            t: 2,
            alpha: 0.5,
            k_max: 4,
            top_n: 10,
            correlation_threshold: 0.5,
            grid: NormalityGrid::default(),
            weights: InterpretabilityWeights::default(),
            seed: 0,
            threads: None,
        }
    }

    pub fn with_pools<C, T>(mut self, cond: C, tran: T) -> Self
    where
        C: IntoIterator,
        C::Item: Into<String>,
        T: IntoIterator,
        T::Item: Into<String>,
    {
        self.cond_pool = cond.into_iter().map(Into::into).collect();
        self.tran_pool = tran.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_limits(mut self, c: usize, t: usize) -> Self {
        self.c = c;
        self.t = t;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn with_top_n(mut self, top_n: usize) -> Self {
        self.top_n = top_n;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn scoring(&self) -> Scoring {
        Scoring {
            alpha: self.alpha,
            grid: self.grid,
            weights: self.weights,
        }
    }

    /// Resolve the config against a frame: check every knob and attribute,
    /// map the `<target>_old` alias to the target, add the target to the
    /// transformation pool, sort and dedupe both pools, and cap `c`/`t` at the
    /// pool sizes.
    pub fn resolve(&self, frame: &Frame) -> Result<DiscoveryConfig, DiscoveryError> {
        if frame.target() != self.target {
            return Err(DiscoveryError::InvalidConfig(format!(
                "config targets `{}` but the frame targets `{}`",
                self.target,
                frame.target()
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(DiscoveryError::InvalidConfig(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.c == 0 || self.t == 0 {
            return Err(DiscoveryError::InvalidConfig("c and t must be at least 1".into()));
        }
        if self.k_max == 0 {
            return Err(DiscoveryError::InvalidConfig("k_max must be at least 1".into()));
        }
        if self.top_n == 0 {
            return Err(DiscoveryError::InvalidConfig("top_n must be at least 1".into()));
        }
        if let Some(0) = self.threads {
            return Err(DiscoveryError::InvalidConfig("threads must be at least 1".into()));
        }
        self.grid.validate().map_err(DiscoveryError::InvalidConfig)?;
        self.weights.validate().map_err(DiscoveryError::InvalidConfig)?;

        let alias = format!("{}_old", self.target);
        let mut cond = BTreeSet::new();
        for a in &self.cond_pool {
            if a == frame.key_attribute() {
                return Err(DiscoveryError::InvalidConfig(format!(
                    "key attribute `{a}` cannot be a condition"
                )));
            }
            let name = if *a == alias { &self.target } else { a };
            if frame.column(name).is_none() {
                return Err(DiscoveryError::UnknownAttribute(a.clone()));
            }
            cond.insert(name.clone());
        }
        if cond.is_empty() {
            return Err(DiscoveryError::NoCandidates("the condition pool is empty".into()));
        }
        let mut tran = BTreeSet::from([self.target.clone()]);
        for a in &self.tran_pool {
            if a == frame.key_attribute() {
                return Err(DiscoveryError::InvalidConfig(format!(
                    "key attribute `{a}` cannot be a regressor"
                )));
            }
            let name = if *a == alias { &self.target } else { a };
            if frame.column(name).is_none() {
                return Err(DiscoveryError::UnknownAttribute(a.clone()));
            }
            if frame.numeric(name).is_none() {
                return Err(DiscoveryError::NonNumericRegressor(a.clone()));
            }
            tran.insert(name.clone());
        }
        let mut out = self.clone();
        out.cond_pool = cond.into_iter().collect();
        out.tran_pool = tran.into_iter().collect();
        out.c = self.c.min(out.cond_pool.len());
        out.t = self.t.min(out.tran_pool.len());
        Ok(out)
    }

    /// Number of (C, T, k) tuples a resolved config enumerates.
    pub fn candidate_count(&self) -> u128 {
        subset_count(self.cond_pool.len(), self.c) * subset_count(self.tran_pool.len(), self.t) * self.k_max as u128
    }
}

/// Σ_{i=1..=max} C(n, i).
fn subset_count(n: usize, max: usize) -> u128 {
    let mut total = 0u128;
    let mut binom = 1u128;
    for i in 1..=max.min(n) {
        binom = binom * (n - i + 1) as u128 / i as u128;
        total += binom;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(subset_count(3, 3), 7);
        assert_eq!(subset_count(2, 2), 3);
        assert_eq!(subset_count(5, 2), 15);
        assert_eq!(subset_count(4, 0), 0);
        let cfg = DiscoveryConfig::new("bonus")
            .with_pools(["edu", "exp", "gen"], ["bonus", "salary"])
            .with_limits(3, 2);
        assert_eq!(cfg.candidate_count(), 84);
    }
}
