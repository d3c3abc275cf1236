//! Offline model repository and online model selection.
//!
//! Offline, historical calibration days are clustered by a weighted L1
//! distance whose weights are the absolute correlation of each field with
//! the model's accuracy, and one compressed model is built per cluster.
//! Online, each day's calibration is matched to the closest stored entry;
//! a new model is compressed only when nothing is close enough.

mod cluster;
mod repository;

pub use cluster::{
    correlation_weights, kmedians, weighted_distance, weighted_kmeans, ClusterModel, KMedians,
    WeightVector, MAX_ITERATIONS,
};
pub use repository::{
    build_repository, history_accuracies, match_online, Decision, OnlineContext, OnlineDecision,
    RepoConfig, RepoEntry, Repository, Source,
};

#[cfg(test)]
mod tests;
