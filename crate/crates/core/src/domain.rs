//! Shared domain types: action sets, policies, reward models, logged data.
//!
//! Actions are dense indices `0..K`. Every type validates its invariants at
//! construction and is immutable afterwards.

use std::num::NonZeroUsize;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OpeError, Result};

/// Tolerance on `|sum(p) - 1|` accepted by [`validate_policy`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation. Error grows as O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        return xs.iter().sum();
    }
    let (lo, hi) = xs.split_at(xs.len() / 2);
    pairwise_sum(lo) + pairwise_sum(hi)
}

/// A finite action set of size `K >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionSet {
    size: NonZeroUsize,
}

impl ActionSet {
    pub fn new(size: usize) -> Result<Self> {
        NonZeroUsize::new(size)
            .map(|size| Self { size })
            .ok_or(OpeError::EmptyActionSet)
    }

    pub fn len(&self) -> usize {
        self.size.get()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, action: usize) -> bool {
        action < self.len()
    }

    pub fn iter(&self) -> std::ops::Range<usize> {
        0..self.len()
    }
}

/// A probability distribution over a finite action set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Policy {
    probs: Vec<f64>,
}

/// Checks a raw probability vector and wraps it as a [`Policy`].
///
/// Entries must be non-negative (signed zero counts as zero) and sum to one
/// within [`NORMALIZATION_TOLERANCE`]. Nothing is rescaled; use
/// [`Policy::renormalized`] for user data that is only proportional.
pub fn validate_policy(probs: &[f64]) -> Result<Policy> {
    if probs.is_empty() {
        return Err(OpeError::EmptyActionSet);
    }
    if let Some((index, &value)) = probs.iter().enumerate().find(|(_, &p)| p < 0.0) {
        return Err(OpeError::NegativeProbability { index, value });
    }
    let sum = pairwise_sum(probs);
    let deviation = (sum - 1.0).abs();
    // written so that NaN fails too
    if !(deviation <= NORMALIZATION_TOLERANCE) {
        return Err(OpeError::NotNormalized { sum, deviation });
    }
    Ok(Policy {
        probs: probs.iter().map(|&p| if p == 0.0 { 0.0 } else { p }).collect(),
    })
}

impl Policy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_policy(&probs)
    }

    /// Scales non-negative weights so they sum to one.
    pub fn renormalized(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(OpeError::EmptyActionSet);
        }
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, &w)| !(w >= 0.0)) {
            return Err(OpeError::NegativeProbability { index, value });
        }
        let total = pairwise_sum(weights);
        if !(total > 0.0) || !total.is_finite() {
            return Err(OpeError::ZeroNormalizer);
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        validate_policy(&probs)
    }

    pub fn uniform(num_actions: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(OpeError::EmptyActionSet);
        }
        Ok(Self {
            probs: vec![1.0 / num_actions as f64; num_actions],
        })
    }

    pub fn one_hot(num_actions: usize, action: usize) -> Result<Self> {
        if action >= num_actions {
            return Err(OpeError::ActionOutOfRange { action, num_actions });
        }
        let mut probs = vec![0.0; num_actions];
        probs[action] = 1.0;
        Ok(Self { probs })
    }

    pub fn num_actions(&self) -> usize {
        self.probs.len()
    }

    pub fn actions(&self) -> ActionSet {
        ActionSet::new(self.probs.len()).expect("validated policies are non-empty")
    }

    pub fn prob(&self, action: usize) -> f64 {
        self.probs[action]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Builds a reusable sampler for this policy.
    pub fn sampler(&self) -> PolicySampler {
        PolicySampler {
            index: WeightedIndex::new(&self.probs).expect("validated policy has positive mass"),
        }
    }
}

/// Draws action indices from a [`Policy`].
#[derive(Debug, Clone)]
pub struct PolicySampler {
    index: WeightedIndex<f64>,
}

impl PolicySampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index.sample(rng)
    }
}

/// Reward distribution attached to a single action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RewardDist {
    Constant {
        value: f64,
    },
    /// `high` with probability `p_high`, else `low`.
    TwoPoint {
        low: f64,
        high: f64,
        p_high: f64,
    },
    /// `scale / sqrt(p)` with probability `p`, else 0.
    ScaledBernoulli {
        scale: f64,
        p: f64,
    },
}

impl RewardDist {
    /// Symmetric two-point law `mean ± sqrt(variance)` with equal mass.
    pub fn two_point_from_moments(mean: f64, variance: f64) -> Result<Self> {
        if !(variance >= 0.0) || !mean.is_finite() || !variance.is_finite() {
            return Err(OpeError::InvalidParameter(format!(
                "two-point moments mean={mean}, variance={variance}"
            )));
        }
        if variance == 0.0 {
            return Ok(Self::Constant { value: mean });
        }
        let sd = variance.sqrt();
        Ok(Self::TwoPoint {
            low: mean - sd,
            high: mean + sd,
            p_high: 0.5,
        })
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Constant { value } => value.is_finite(),
            Self::TwoPoint { low, high, p_high } => {
                low.is_finite() && high.is_finite() && (0.0..=1.0).contains(&p_high)
            }
            Self::ScaledBernoulli { scale, p } => scale.is_finite() && p > 0.0 && p <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(OpeError::InvalidParameter(format!("reward distribution {self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::TwoPoint { low, high, p_high } => p_high * high + (1.0 - p_high) * low,
            Self::ScaledBernoulli { scale, p } => p.sqrt() * scale,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::TwoPoint { low, high, p_high } => {
                let gap = high - low;
                p_high * (1.0 - p_high) * gap * gap
            }
            Self::ScaledBernoulli { scale, p } => (1.0 - p) * scale * scale,
        }
    }

    /// Finite support as `(value, probability)` pairs, used by exact enumeration.
    pub fn support(&self) -> Vec<(f64, f64)> {
        match *self {
            Self::Constant { value } => vec![(value, 1.0)],
            Self::TwoPoint { low, high, p_high } => vec![(low, 1.0 - p_high), (high, p_high)],
            Self::ScaledBernoulli { scale, p } => vec![(0.0, 1.0 - p), (scale / p.sqrt(), p)],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::TwoPoint { low, high, p_high } => {
                if rng.random::<f64>() < p_high {
                    high
                } else {
                    low
                }
            }
            Self::ScaledBernoulli { scale, p } => {
                if rng.random::<f64>() < p {
                    scale / p.sqrt()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-action reward distributions with their exact means `r̄(τ)` and variances `V_r(τ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardModel {
    dists: Vec<RewardDist>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

impl RewardModel {
    pub fn new(dists: Vec<RewardDist>) -> Result<Self> {
        if dists.is_empty() {
            return Err(OpeError::EmptyActionSet);
        }
        for d in &dists {
            d.validate()?;
        }
        let means = dists.iter().map(RewardDist::mean).collect();
        let variances = dists.iter().map(RewardDist::variance).collect();
        Ok(Self {
            dists,
            means,
            variances,
        })
    }

    /// Symmetric two-point rewards matching the given moments.
    pub fn two_point(means: &[f64], variances: &[f64]) -> Result<Self> {
        if means.len() != variances.len() {
            return Err(OpeError::DimensionMismatch {
                expected: means.len(),
                found: variances.len(),
            });
        }
        let dists = means
            .iter()
            .zip(variances)
            .map(|(&m, &v)| RewardDist::two_point_from_moments(m, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dists)
    }

    pub fn deterministic(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&value| RewardDist::Constant { value }).collect())
    }

    pub fn num_actions(&self) -> usize {
        self.dists.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn dist(&self, action: usize) -> &RewardDist {
        &self.dists[action]
    }

    pub fn sample<R: Rng + ?Sized>(&self, action: usize, rng: &mut R) -> f64 {
        self.dists[action].sample(rng)
    }
}

/// One logged interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub action: usize,
    pub reward: f64,
    pub policy_id: usize,
}

/// Logged data `D^N`: a non-empty sequence of records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoggedDataset {
    records: Vec<Record>,
}

impl LoggedDataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(OpeError::EmptyDataset);
        }
        if let Some((index, r)) = records.iter().enumerate().find(|(_, r)| !r.reward.is_finite()) {
            return Err(OpeError::NonFiniteReward { index, value: r.reward });
        }
        Ok(Self { records })
    }

    /// All records logged by policy 0.
    pub fn single_policy(actions: &[usize], rewards: &[f64]) -> Result<Self> {
        if actions.len() != rewards.len() {
            return Err(OpeError::DimensionMismatch {
                expected: actions.len(),
                found: rewards.len(),
            });
        }
        Self::new(
            actions
                .iter()
                .zip(rewards)
                .map(|(&action, &reward)| Record {
                    action,
                    reward,
                    policy_id: 0,
                })
                .collect(),
        )
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_actions(&self, num_actions: usize) -> Result<()> {
        match self.records.iter().find(|r| r.action >= num_actions) {
            Some(r) => Err(OpeError::ActionOutOfRange {
                action: r.action,
                num_actions,
            }),
            None => Ok(()),
        }
    }

    pub fn check_policies(&self, num_policies: usize) -> Result<()> {
        match self.records.iter().find(|r| r.policy_id >= num_policies) {
            Some(r) => Err(OpeError::PolicyOutOfRange {
                policy_id: r.policy_id,
                num_policies,
            }),
            None => Ok(()),
        }
    }
}

/// Per-action sample counts `k_τ` of a sampled path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PathCounts {
    counts: Vec<usize>,
    total: usize,
}

impl PathCounts {
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(OpeError::EmptyActionSet);
        }
        let total = counts.iter().sum();
        Ok(Self { counts, total })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn get(&self, action: usize) -> usize {
        self.counts[action]
    }

    pub fn num_actions(&self) -> usize {
        self.counts.len()
    }

    /// `N`, the length of the originating path.
    pub fn total(&self) -> usize {
        self.total
    }
}

/// Counts how often each action occurs in the dataset.
pub fn path_counts(d: &LoggedDataset, num_actions: usize) -> Result<PathCounts> {
    ActionSet::new(num_actions)?;
    d.check_actions(num_actions)?;
    let mut counts = vec![0usize; num_actions];
    for r in d.records() {
        counts[r.action] += 1;
    }
    PathCounts::from_counts(counts)
}

/// Per-action empirical mean rewards `r̂(τ)`; unsampled actions get 0.
pub fn empirical_means(d: &LoggedDataset, num_actions: usize) -> Result<Vec<f64>> {
    ActionSet::new(num_actions)?;
    d.check_actions(num_actions)?;
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); num_actions];
    for r in d.records() {
        buckets[r.action].push(r.reward);
    }
    Ok(buckets
        .iter()
        .map(|b| {
            if b.is_empty() {
                0.0
            } else if b.iter().all(|&x| x == b[0]) {
                b[0]
            } else {
                pairwise_sum(b) / b.len() as f64
            }
        })
        .collect())
}

/// Per-action unbiased sample variances; 0 where fewer than two samples exist.
pub fn empirical_variances(d: &LoggedDataset, num_actions: usize) -> Result<Vec<f64>> {
    let means = empirical_means(d, num_actions)?;
    let mut sq: Vec<Vec<f64>> = vec![Vec::new(); num_actions];
    for r in d.records() {
        let dev = r.reward - means[r.action];
        sq[r.action].push(dev * dev);
    }
    Ok(sq
        .iter()
        .map(|b| {
            if b.len() < 2 {
                0.0
            } else {
                pairwise_sum(b) / (b.len() - 1) as f64
            }
        })
        .collect())
}

/// `J(π_test) = Σ_τ π_test(τ) r̄(τ)`.
pub fn true_value(p_test: &Policy, rm: &RewardModel) -> Result<f64> {
    if p_test.num_actions() != rm.num_actions() {
        return Err(OpeError::DimensionMismatch {
            expected: p_test.num_actions(),
            found: rm.num_actions(),
        });
    }
    let terms: Vec<f64> = p_test.probs().iter().zip(rm.means()).map(|(p, r)| p * r).collect();
    Ok(pairwise_sum(&terms))
}

/// Test-policy mass sitting on actions that never appear in the path.
pub fn unsampled_test_mass(counts: &PathCounts, p_test: &Policy) -> Result<f64> {
    if counts.num_actions() != p_test.num_actions() {
        return Err(OpeError::DimensionMismatch {
            expected: p_test.num_actions(),
            found: counts.num_actions(),
        });
    }
    let terms: Vec<f64> = counts
        .counts()
        .iter()
        .zip(p_test.probs())
        .filter(|(&k, _)| k == 0)
        .map(|(_, &p)| p)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Per-action multipliers `ω(τ, s)`; entries are always finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite()) {
            return Err(OpeError::InvalidParameter(format!(
                "weight {index} is not finite ({value})"
            )));
        }
        Ok(Self { weights })
    }

    pub fn constant(num_actions: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; num_actions])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, action: usize) -> f64 {
        self.weights[action]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
