//! Gustafson-Kessel fuzzy clustering with Babuška's covariance conditioning
//! (GK-B).
//!
//! Each iteration computes membership-weighted prototypes and covariances,
//! conditions the covariances (blend toward a scaled identity, then clip the
//! eigenvalue spread at `β`), derives volume-normalized norm matrices, and
//! recomputes memberships from the resulting Mahalanobis-type distances. The
//! loop stops when no membership changes by more than `ε`.

mod fit;
mod model;
mod params;
mod partition;

pub use fit::{fit, fit_from, fit_observed, objective, FitResult, IterationSnapshot};
pub use model::{
    compute_distances, condition_covariance, norm_matrix, raw_covariance, update_covariances,
    update_prototypes, ClusterModel, ModelExport,
};
pub use params::{GkbParams, MembershipExponent, DEFAULT_MAX_ITERS};
pub use partition::{
    init_partition, update_memberships, Distances, FeatureMatrix, FuzzyPartition,
    STOCHASTIC_TOLERANCE,
};

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("invalid clustering parameters: {0}")]
    InvalidParams(String),
    #[error("{clusters} clusters need more than {points} data points")]
    TooFewPoints { points: usize, clusters: usize },
    #[error("cluster {cluster} has no membership mass")]
    DegenerateCluster { cluster: usize },
    #[error("data contains non-finite values")]
    NonFiniteData,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("covariance conditioning failed: {0}")]
    Conditioning(String),
}
