//! Bayesian multiple comparisons by model averaging over partitions of groups.
//!
//! Groups whose parameters are equal share a block of a set partition. A prior
//! over partitions combined with per-partition marginal likelihoods yields
//! posterior probabilities for every equality pattern, and from those the
//! posterior probability that any two groups are equal.

pub mod combinatorics;
pub mod error;
pub mod inference;
pub mod math;
pub mod model;
pub mod partition;
pub mod prior;
pub mod report;
pub mod study;

pub use error::{Error, Result};
pub use partition::{MembershipVector, Partition};
pub use prior::{Prior, PriorSpec};
