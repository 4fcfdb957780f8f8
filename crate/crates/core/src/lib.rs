//! Off-policy value estimation on finite action sets.
//!
//! The crate covers single-policy estimators (BIS, NIS, EA), multi-policy
//! estimators (BIS, FIS, OUIS and their normalized and capped variants),
//! closed-form MSE-optimal weights, variance decompositions and the synthetic
//! environments used to benchmark them.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod domain;
pub mod env;
pub mod error;
pub mod multi;
pub mod oracle;
pub mod single;

pub use domain::{
    empirical_means, empirical_variances, pairwise_sum, path_counts, true_value, unsampled_test_mass, validate_policy,
    ActionSet, LoggedDataset, PathCounts, Policy, Record, RewardDist, RewardModel, WeightVector,
};
pub use error::{OpeError, Result};
