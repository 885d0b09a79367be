//! The search: attribute shortlisting, candidate enumeration over
//! (condition attributes, transformation attributes, k), partition and
//! transformation discovery, scoring and ranking.

mod config;
mod enumerate;
mod partitions;
mod pipeline;
mod shortlist;
mod transformations;

pub use config::DiscoveryConfig;
pub use enumerate::{enumerate_candidates, Candidate};
pub use partitions::{discover_partitions, Partition, PartitionSet};
pub use pipeline::{evaluate_candidate, rank_summaries, run_pipeline, RankedSummaries, SkippedCandidate};
pub use shortlist::{shortlist_attributes, AttributeScore, Measure, Shortlist};
pub use transformations::{discover_transformations, FittedPartition};

use thiserror::Error;

use crate::error::ErrorClass;
use crate::snapshot::SnapshotError;
use crate::stats::StatsError;
use crate::summary::SummaryError;

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("transformation attribute `{0}` is not numeric")]
    NonNumericRegressor(String),
    #[error("no candidates: {0}")]
    NoCandidates(String),
    #[error("{count} candidates exceed the budget of {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error("partition `{0}` matches no rows")]
    EmptyPartition(String),
}

impl DiscoveryError {
    pub fn class(&self) -> ErrorClass {
        match self {
            DiscoveryError::Snapshot(e) => e.class(),
            DiscoveryError::Stats(_) | DiscoveryError::EmptyPartition(_) => ErrorClass::Input,
            DiscoveryError::Summary(_) => ErrorClass::Schema,
            DiscoveryError::InvalidConfig(_)
            | DiscoveryError::UnknownAttribute(_)
            | DiscoveryError::NonNumericRegressor(_)
            | DiscoveryError::NoCandidates(_)
            | DiscoveryError::BudgetExceeded { .. } => ErrorClass::Config,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            DiscoveryError::Snapshot(e) => e.code(),
            DiscoveryError::Stats(StatsError::KTooLarge { .. }) => "KTooLarge",
            DiscoveryError::Stats(_) => "StatsError",
            DiscoveryError::Summary(e) => e.code(),
            DiscoveryError::InvalidConfig(_) => "InvalidConfig",
            DiscoveryError::UnknownAttribute(_) => "UnknownAttribute",
            DiscoveryError::NonNumericRegressor(_) => "NonNumericRegressor",
            DiscoveryError::NoCandidates(_) => "NoCandidates",
            DiscoveryError::BudgetExceeded { .. } => "BudgetExceeded",
            DiscoveryError::EmptyPartition(_) => "EmptyPartition",
        }
    }
}

/// Absolute slack for "exact" comparisons of L1 sums over `rows` rows whose
/// responses have magnitude up to `scale`.
pub(crate) fn l1_tolerance(scale: f64, rows: usize) -> f64 {
    1e-9 * scale.max(1.0) * rows.max(1) as f64
}
