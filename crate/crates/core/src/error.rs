use thiserror::Error;

use crate::discovery::DiscoveryError;
use crate::snapshot::SnapshotError;
use crate::stats::StatsError;
use crate::summary::SummaryError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Umbrella error for callers that drive the whole engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
}

/// Coarse classification used by the CLI exit codes and the HTTP status mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Unreadable or malformed input files.
    Input,
    /// Schema, key or target-attribute problems.
    Schema,
    /// Invalid discovery configuration.
    Config,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Snapshot(e) => e.class(),
            Error::Stats(_) => ErrorClass::Input,
            Error::Summary(_) => ErrorClass::Schema,
            Error::Discovery(e) => e.class(),
        }
    }

    /// Stable machine-readable code, e.g. `NonNumericTarget`.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Snapshot(e) => e.code(),
            Error::Stats(_) => "StatsError",
            Error::Summary(e) => e.code(),
            Error::Discovery(e) => e.code(),
        }
    }
}
