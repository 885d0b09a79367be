//! Semantic change summaries between two snapshots of a relational table.
//!
//! Given a source and a target version of the same table (same schema, same
//! entities, only numeric cells changed), `chardiff` searches for sets of
//! *conditional transformations*, such as
//! `edu = PhD → new_bonus = 1.05 × old_bonus + 1000`, that explain how one
//! numeric attribute evolved, and ranks them by a tunable blend of accuracy
//! and interpretability.
//!
//! Start with [`snapshot`] for CSV ingestion and key alignment, then
//! [`discovery::run_pipeline`] for the ranked search. [`summary`] holds the
//! explanation language, scoring and tree rendering.
//!
//! ```no_run
//! use chardiff::prelude::*;
//!
//! let opts = LoadOptions::new("name");
//! let source = load_snapshot("employees_2016.csv", &opts)?;
//! let target = load_snapshot("employees_2017.csv", &opts)?;
//! let pair = align(&source, &target, "name")?;
//! let frame = Frame::new(&pair, "bonus")?;
//!
//! let config = DiscoveryConfig::new("bonus")
//!     .with_pools(["edu", "exp", "gen"], ["bonus", "salary"])
//!     .with_limits(2, 1);
//! let ranked = run_pipeline(&frame, &config)?;
//! println!("{}", ranked.entries[0].to_tree().render());
//! # Ok::<(), chardiff::Error>(())
//! ```

pub mod discovery;
pub mod frame;
pub mod report;
pub mod snapshot;
pub mod stats;
pub mod summary;
pub mod synthetic;

mod error;

pub use error::{Error, ErrorClass, Result};

pub mod prelude {
    pub use crate::discovery::{
        enumerate_candidates, run_pipeline, shortlist_attributes, DiscoveryConfig, RankedSummaries,
    };
    pub use crate::frame::Frame;
    pub use crate::snapshot::{align, compute_delta, load_snapshot, AlignedPair, LoadOptions, Snapshot};
    pub use crate::stats::NormalityGrid;
    pub use crate::summary::{ChangeSummary, Condition, LinearTransformation, Predicate, ScoreBreakdown};
}
