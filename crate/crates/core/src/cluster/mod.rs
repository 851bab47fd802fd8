//! Cluster states from adjacency matrices: construction, nullifiers and the
//! orthogonal-freedom optimizer.

mod graph;
mod nullifier;
mod optimize;

pub use graph::{builtin_graph, Graph, BUILTIN_GRAPHS};
pub use nullifier::{
    cluster_condition_residual, cluster_unitary, nullifier_matrix, nullifier_variances,
    nullifier_variances_cov, NullifierSet, NullifierVariances,
};
pub use optimize::{
    optimize_orthogonal, optimize_orthogonal_cov, ClusterObjective, EsConfig, Objective,
    OptimizationResult, OrthogonalFreedom,
};
