use thiserror::Error;

/// Errors raised by validation, estimation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpeError {
    #[error("action set must contain at least one action")]
    EmptyActionSet,

    #[error("probability at index {index} is negative ({value})")]
    NegativeProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, deviation {deviation} exceeds tolerance")]
    NotNormalized { sum: f64, deviation: f64 },

    #[error("logged dataset must contain at least one record")]
    EmptyDataset,

    #[error("reward at record {index} is not finite ({value})")]
    NonFiniteReward { index: usize, value: f64 },

    #[error("action {action} out of range for {num_actions} actions")]
    ActionOutOfRange { action: usize, num_actions: usize },

    #[error("policy id {policy_id} out of range for {num_policies} policies")]
    PolicyOutOfRange { policy_id: usize, num_policies: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("record {record} policy id {found} does not match the family assignment {expected}")]
    AssignmentMismatch {
        record: usize,
        expected: usize,
        found: usize,
    },

    #[error("action {action} was logged but its behavior probability is zero")]
    UnsupportedAction { action: usize },

    #[error("normalizing mass is zero")]
    ZeroNormalizer,

    #[error("fused behavior mass is zero for action {action}")]
    ZeroFusedMass { action: usize },

    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(&'static str),

    #[error("reward variance is zero for action {action}; use the constant-weight limit")]
    ZeroVariance { action: usize },

    #[error("action is degenerate (zero mean and zero variance)")]
    DegenerateAction,

    #[error("non-zero weight on unsampled action {action} with positive reward variance")]
    InfiniteConditionalVariance { action: usize },

    #[error("count-vector enumeration has {size} states, limit is {limit}")]
    EnumerationTooLarge { size: f64, limit: f64 },

    #[error("entry {index} must be strictly positive, got {value}")]
    NonPositiveEntry { index: usize, value: f64 },

    #[error("success probability {0} outside (0, 1]")]
    InvalidP(f64),

    #[error("number of actions {0} must be even and at least 2")]
    OddK(usize),

    #[error("peak indices must be distinct, both are {0}")]
    IndexClash(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, OpeError>;
