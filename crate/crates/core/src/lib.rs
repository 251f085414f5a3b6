//! Minimum spanning trees under edge-weight differential privacy.
//!
//! The graph topology is public and the edge weights are private; two weight
//! assignments are neighbours when every weight differs by at most the
//! sensitivity `Δ∞`. The crate provides:
//!
//! * [`graph`]: topology, weights, the exact MST oracle and the CSV edge list.
//! * [`noise`]: seeded samplers (exponential, max-of-exponentials, binomial
//!   by geometric skipping, Gaussian, Laplace, subsets).
//! * [`rnm`]: Report-Noisy-Max and its fast simulation over discretized
//!   groups with a binomial tail for far-away candidates.
//! * [`cut_queue`]: the layered group structure holding Prim's cut edges.
//! * [`mst_private`]: Fast-PAMST, the PAMST baseline, the Gaussian and
//!   Laplace post-processing baselines and budget accounting.
//!
//! Noise is generated with ordinary floating point arithmetic. It is not
//! hardened against floating-point side channels and should not be used to
//! protect real data as is.

pub mod cut_queue;
mod error;
pub mod graph;
pub mod mst_private;
pub mod noise;
pub mod rnm;

pub use error::{Error, Result};
pub use graph::{EdgeId, Graph, TreeResult, WeightAssignment};
pub use noise::{Rate, RngStream};
