//! Synthetic environments and seeded random streams.
//!
//! Action indices are 0-based everywhere. The scaled-Bernoulli helpers take
//! 1-based positions `i = 1..K` in their formulas and store them at index
//! `i − 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;

use crate::domain::{LoggedDataset, Policy, Record, RewardDist, RewardModel};
use crate::error::{OpeError, Result};
use crate::multi::PolicyFamily;

/// Independent generator for replication `index` under `seed`.
///
/// Each `(seed, index)` pair selects its own ChaCha stream, so replications
/// can run in any order or in parallel and still reproduce exactly.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Derives an unrelated seed for a named sub-task, so that e.g. the bootstrap
/// never reuses the sampling streams.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ domain.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Bandit whose action `τ` pays `Z(τ)/√p` with probability `p`, else 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledBernoulliEnv {
    k: usize,
    p: f64,
    z: Vec<f64>,
    model: RewardModel,
}

impl ScaledBernoulliEnv {
    pub fn num_actions(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Scale levels `Z`, 0-based.
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn reward_model(&self) -> &RewardModel {
        &self.model
    }
}

/// `Z(i) = i/K` for `i ≤ K/2` and `Z(i) = Z(K − i)` above, 1-based.
///
/// Note `Z(K) = Z(0) = 0`, so the last action never pays.
pub fn make_scaled_bernoulli(k: usize, p: f64) -> Result<ScaledBernoulliEnv> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(OpeError::OddK(k));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(OpeError::InvalidP(p));
    }
    let z: Vec<f64> = (1..=k)
        .map(|i| {
            let j = if i <= k / 2 { i } else { k - i };
            j as f64 / k as f64
        })
        .collect();
    let model = RewardModel::new(
        z.iter()
            .map(|&scale| RewardDist::ScaledBernoulli { scale, p })
            .collect(),
    )?;
    Ok(ScaledBernoulliEnv { k, p, z, model })
}

/// `π(i) = 2i / (K(K+1))` for 1-based `i`.
pub fn behavior_policy_linear(k: usize) -> Result<Policy> {
    if k == 0 {
        return Err(OpeError::EmptyActionSet);
    }
    let denom = (k * (k + 1)) as f64;
    Policy::new((1..=k).map(|i| (2 * i) as f64 / denom).collect())
}

/// Two peaks (0-based indices) of `peak_mass` each, the rest spread evenly.
pub fn peaked_test_policy(k: usize, peaks: (usize, usize), peak_mass: f64) -> Result<Policy> {
    let (a, b) = peaks;
    if a == b {
        return Err(OpeError::IndexClash(a));
    }
    for idx in [a, b] {
        if idx >= k {
            return Err(OpeError::ActionOutOfRange {
                action: idx,
                num_actions: k,
            });
        }
    }
    if !(peak_mass > 0.0 && peak_mass <= 0.5) {
        return Err(OpeError::InvalidParameter(format!(
            "peak mass {peak_mass} outside (0, 0.5]"
        )));
    }
    let rest = 1.0 - 2.0 * peak_mass;
    if k == 2 && rest > 0.0 {
        return Err(OpeError::InvalidParameter(
            "two actions leave nowhere to put the remaining mass".into(),
        ));
    }
    let other = if k > 2 { rest / (k - 2) as f64 } else { 0.0 };
    let mut probs = vec![other; k];
    probs[a] = peak_mass;
    probs[b] = peak_mass;
    Policy::new(probs)
}

/// The test policy of the scaled-Bernoulli sweep: 0.475 on 1-based actions
/// 10 and 20 (0-based 9 and 19) at `K = 20`, i.e. on `K/2` and `K` in general.
pub fn default_test_policy(k: usize) -> Result<Policy> {
    if k < 2 {
        return Err(OpeError::OddK(k));
    }
    peaked_test_policy(k, (k / 2 - 1, k - 1), 0.475)
}

/// Draws one record per family slot: `τ_i ~ π_{a(i)}`, `r_i ~ rm(τ_i)`.
pub fn sample_dataset<R: Rng + ?Sized>(rm: &RewardModel, fam: &PolicyFamily, rng: &mut R) -> Result<LoggedDataset> {
    if rm.num_actions() != fam.num_actions() {
        return Err(OpeError::DimensionMismatch {
            expected: fam.num_actions(),
            found: rm.num_actions(),
        });
    }
    let samplers: Vec<_> = fam.policies().iter().map(Policy::sampler).collect();
    let records = fam
        .assignment()
        .iter()
        .map(|&policy_id| {
            let action = samplers[policy_id].sample(rng);
            Record {
                action,
                reward: rm.sample(action, rng),
                policy_id,
            }
        })
        .collect();
    LoggedDataset::new(records)
}

/// Hard cap on episode length for [`sample_adaptive_stop`].
pub const DEFAULT_ADAPTIVE_CAP: usize = 10_000;

/// Bernoulli(1/2) draws of one action, stopped at the first 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdaptiveStopLog {
    draws: Vec<u8>,
    capped: bool,
}

impl AdaptiveStopLog {
    pub fn draws(&self) -> &[u8] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Episode ended at the cap rather than at a 0.
    pub fn capped(&self) -> bool {
        self.capped
    }

    pub fn ones(&self) -> usize {
        self.draws.iter().filter(|&&d| d == 1).count()
    }

    /// Empirical mean of the episode.
    pub fn ea_estimate(&self) -> f64 {
        self.ones() as f64 / self.len() as f64
    }
}

/// Samples until the first 0 or until `cap` draws.
pub fn sample_adaptive_stop<R: Rng + ?Sized>(rng: &mut R, cap: usize) -> Result<AdaptiveStopLog> {
    if cap == 0 {
        return Err(OpeError::InvalidParameter("cap must be at least 1".into()));
    }
    let mut draws = Vec::new();
    while draws.len() < cap {
        let d = u8::from(rng.random::<bool>());
        draws.push(d);
        if d == 0 {
            return Ok(AdaptiveStopLog { draws, capped: false });
        }
    }
    Ok(AdaptiveStopLog { draws, capped: true })
}

/// Minimum probability of any action in [`make_policy_family`].
pub const FAMILY_FLOOR: f64 = 1e-4;

const FAMILY_GAMMA_SHAPE: f64 = 0.3;

fn random_peaked<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let g = Gamma::new(FAMILY_GAMMA_SHAPE, 1.0).expect("valid gamma parameters");
    let mut raw: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
    let s: f64 = raw.iter().sum();
    if !(s > 0.0) {
        // every draw underflowed; fall back to a single random peak
        raw.iter_mut().for_each(|x| *x = 0.0);
        raw[rng.random_range(0..k)] = 1.0;
        return raw;
    }
    raw.iter_mut().for_each(|x| *x /= s);
    raw
}

fn floor_mix(v: &[f64], floor: f64) -> Result<Policy> {
    let k = v.len() as f64;
    let raw: Vec<f64> = v.iter().map(|x| floor + (1.0 - k * floor) * x).collect();
    Policy::renormalized(&raw)
}

/// `M` policies mixing uniform with independent Dirichlet(0.3) draws.
///
/// `π_j = floor + (1 − K·floor)·((1 − spread)·uniform + spread·D_j)`, so
/// `spread = 0` gives identical uniform policies and every entry is at least
/// `floor`. Each policy logs `per_policy` consecutive records.
pub fn make_policy_family(
    k: usize,
    m: usize,
    per_policy: usize,
    spread: f64,
    floor: f64,
    seed: u64,
) -> Result<PolicyFamily> {
    if k == 0 {
        return Err(OpeError::EmptyActionSet);
    }
    if m == 0 || per_policy == 0 {
        return Err(OpeError::InvalidParameter(
            "family needs at least one policy and one record per policy".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spread) {
        return Err(OpeError::InvalidParameter(format!("spread {spread} outside [0, 1]")));
    }
    if !(floor >= 0.0 && floor * k as f64 <= 1.0) {
        return Err(OpeError::InvalidParameter(format!("floor {floor} too large for K={k}")));
    }
    let mut rng = stream(seed, 0);
    let uniform = 1.0 / k as f64;
    let policies = (0..m)
        .map(|_| {
            let d = random_peaked(&mut rng, k);
            let mix: Vec<f64> = d.iter().map(|x| (1.0 - spread) * uniform + spread * x).collect();
            if spread == 0.0 {
                Policy::uniform(k)
            } else {
                floor_mix(&mix, floor)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PolicyFamily::round_robin(policies, per_policy)
}

/// A full multi-policy benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiPolicyInstance {
    pub family: PolicyFamily,
    pub p_test: Policy,
    pub rewards: RewardModel,
}

/// Shape of a random multi-policy instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiPolicySpec {
    pub k: usize,
    pub policies: usize,
    pub per_policy: usize,
    pub spread: f64,
    /// Success probability of every action's scaled-Bernoulli reward.
    pub reward_p: f64,
    pub floor: f64,
}

/// Family from [`make_policy_family`], a random test policy and
/// scaled-Bernoulli rewards with scales drawn uniformly from `[0.5, 1]`.
pub fn make_multi_policy_instance(spec: &MultiPolicySpec, seed: u64) -> Result<MultiPolicyInstance> {
    let MultiPolicySpec {
        k,
        policies: m,
        per_policy,
        spread,
        reward_p,
        floor,
    } = *spec;
    if !(reward_p > 0.0 && reward_p <= 1.0) {
        return Err(OpeError::InvalidP(reward_p));
    }
    let family = make_policy_family(k, m, per_policy, spread, floor, seed)?;
    let mut rng = stream(seed, 1);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let p_test = Policy::renormalized(&raw)?;
    let rewards = RewardModel::new(
        (0..k)
            .map(|_| RewardDist::ScaledBernoulli {
                scale: rng.random_range(0.5..1.0),
                p: reward_p,
            })
            .collect(),
    )?;
    Ok(MultiPolicyInstance {
        family,
        p_test,
        rewards,
    })
}
