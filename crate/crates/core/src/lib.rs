//! Gaussian-state modeling of multimode squeezed-light networks: resource
//! covariances, homodyne projections, cluster-state nullifiers and
//! quantum secret sharing over a six-mode network.

pub mod cluster;
pub mod error;
pub mod gaussian;
pub mod homodyne;
pub mod io;
pub mod resource;
pub mod secret;

pub use error::{Error, Result};
