//! Numeric kernels used by discovery: least squares, correlation, exact 1-D
//! k-means and grid snapping.

mod correlation;
mod kmeans;
mod normality;
mod ols;

pub use correlation::{correlation_ratio, pearson};
pub use kmeans::{kmeans_1d, Clustering1D};
pub use normality::{grid_index, grid_point, significant_digits, snap, NormalityGrid, Role, Snapped};
pub use ols::{ols_fit, OlsFit};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("k = {k} exceeds the {distinct} distinct values")]
    KTooLarge { k: usize, distinct: usize },
    #[error("k must be at least 1")]
    ZeroClusters,
}
