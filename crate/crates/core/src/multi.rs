//! Estimators for data logged by several behavior policies.
//!
//! Record `i` was drawn from policy `π_{a(i)}` where `a` is the family's
//! assignment. All unbiased estimators here share one form,
//! `Ĵ = Σ_i α^i(τ_i) [π_test(τ_i)/π_i(τ_i)] r_i`, with `Σ_i α^i(τ) = 1`:
//!
//! * BIS: `α^i(τ) = 1/N`
//! * FIS: `α^i(τ) = π_i(τ) / Σ_j π_j(τ)` (the fused mixture)
//! * OUIS: `α^i(τ) ∝ π_i(τ) / (r̄²(τ)(1 − π_i(τ)) + V_r(τ))`
//!
//! Normalized variants divide by the sum of the per-record weights instead of
//! relying on the constraint. Capped variants clip the importance ratio at
//! [`CapConfig::cap`] before the `1/N` factor.

use serde::{Deserialize, Serialize};

use crate::domain::{
    empirical_means, empirical_variances, pairwise_sum, LoggedDataset, Policy, RewardDist, RewardModel,
};
use crate::error::{OpeError, Result};
use crate::oracle::optimal_unbiased_alphas;

/// Behavior policies plus the policy index of every logged record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyFamily {
    policies: Vec<Policy>,
    assignment: Vec<usize>,
}

impl PolicyFamily {
    pub fn new(policies: Vec<Policy>, assignment: Vec<usize>) -> Result<Self> {
        let first = policies.first().ok_or(OpeError::InvalidParameter(
            "policy family needs at least one policy".into(),
        ))?;
        let k = first.num_actions();
        if let Some(p) = policies.iter().find(|p| p.num_actions() != k) {
            return Err(OpeError::DimensionMismatch {
                expected: k,
                found: p.num_actions(),
            });
        }
        if assignment.is_empty() {
            return Err(OpeError::EmptyDataset);
        }
        if let Some(&policy_id) = assignment.iter().find(|&&a| a >= policies.len()) {
            return Err(OpeError::PolicyOutOfRange {
                policy_id,
                num_policies: policies.len(),
            });
        }
        Ok(Self { policies, assignment })
    }

    /// `per_policy` consecutive records for each policy, in policy order.
    pub fn round_robin(policies: Vec<Policy>, per_policy: usize) -> Result<Self> {
        let assignment = (0..policies.len())
            .flat_map(|i| std::iter::repeat_n(i, per_policy))
            .collect();
        Self::new(policies, assignment)
    }

    /// One policy that logged all `n` records.
    pub fn single(policy: Policy, n: usize) -> Result<Self> {
        Self::new(vec![policy], vec![0; n])
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn num_actions(&self) -> usize {
        self.policies[0].num_actions()
    }

    pub fn num_policies(&self) -> usize {
        self.policies.len()
    }

    /// Number of records `N`.
    pub fn num_records(&self) -> usize {
        self.assignment.len()
    }

    /// Policy that generated record `i`.
    pub fn record_policy(&self, i: usize) -> &Policy {
        &self.policies[self.assignment[i]]
    }

    /// `π_i(τ)` for every record `i`.
    pub fn record_probs(&self, action: usize) -> Vec<f64> {
        self.assignment.iter().map(|&a| self.policies[a].prob(action)).collect()
    }

    /// Fused mass `F(τ) = Σ_i π_i(τ)` over records.
    pub fn fused_mass(&self, action: usize) -> f64 {
        pairwise_sum(&self.record_probs(action))
    }

    /// Checks that a dataset was produced under this family.
    pub fn check_dataset(&self, d: &LoggedDataset) -> Result<()> {
        if d.len() != self.num_records() {
            return Err(OpeError::DimensionMismatch {
                expected: self.num_records(),
                found: d.len(),
            });
        }
        d.check_actions(self.num_actions())?;
        for (record, (r, &expected)) in d.records().iter().zip(&self.assignment).enumerate() {
            if r.policy_id != expected {
                return Err(OpeError::AssignmentMismatch {
                    record,
                    expected,
                    found: r.policy_id,
                });
            }
        }
        Ok(())
    }

    fn check_test_policy(&self, p_test: &Policy) -> Result<()> {
        if p_test.num_actions() == self.num_actions() {
            Ok(())
        } else {
            Err(OpeError::DimensionMismatch {
                expected: self.num_actions(),
                found: p_test.num_actions(),
            })
        }
    }
}

/// Maximum admissible importance ratio for capped estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapConfig {
    cap: f64,
}

impl CapConfig {
    pub const DEFAULT_CAP: f64 = 10.0;

    pub fn new(cap: f64) -> Result<Self> {
        if cap > 0.0 && !cap.is_nan() {
            Ok(Self { cap })
        } else {
            Err(OpeError::InvalidParameter(format!("cap must be positive, got {cap}")))
        }
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }
}

impl Default for CapConfig {
    fn default() -> Self {
        Self { cap: Self::DEFAULT_CAP }
    }
}

/// `min(w, cap)` for every ratio, order preserved.
pub fn cap_ratios(ratios: &[f64], c: &CapConfig) -> Vec<f64> {
    ratios.iter().map(|&w| w.min(c.cap)).collect()
}

/// Per-action, per-record weights `α^i(τ)` stored as a `K × N` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaWeights {
    table: Vec<Vec<f64>>,
}

impl AlphaWeights {
    /// `α^i(τ) = 1/N`.
    pub fn bis(fam: &PolicyFamily) -> Self {
        let n = fam.num_records();
        Self {
            table: vec![vec![1.0 / n as f64; n]; fam.num_actions()],
        }
    }

    /// `α^i(τ) = π_i(τ)/Σ_j π_j(τ)`; actions no policy can produce get `1/N`.
    pub fn fis(fam: &PolicyFamily) -> Self {
        let n = fam.num_records();
        let table = (0..fam.num_actions())
            .map(|a| {
                let probs = fam.record_probs(a);
                let f = pairwise_sum(&probs);
                if f > 0.0 {
                    probs.iter().map(|p| p / f).collect()
                } else {
                    vec![1.0 / n as f64; n]
                }
            })
            .collect();
        Self { table }
    }

    /// MSE-optimal unbiased weights for the given reward moments.
    ///
    /// Actions with `r̄ = V_r = 0` or with no fused mass contribute nothing
    /// whatever their weights, so they get the fused weights.
    pub fn ouis(fam: &PolicyFamily, means: &[f64], variances: &[f64]) -> Result<Self> {
        let k = fam.num_actions();
        for len in [means.len(), variances.len()] {
            if len != k {
                return Err(OpeError::DimensionMismatch {
                    expected: k,
                    found: len,
                });
            }
        }
        let fis = Self::fis(fam);
        let table = (0..k)
            .map(|a| {
                if (means[a] == 0.0 && variances[a] == 0.0) || fam.fused_mass(a) == 0.0 {
                    Ok(fis.table[a].clone())
                } else {
                    optimal_unbiased_alphas(a, fam, means[a], variances[a])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { table })
    }

    pub fn get(&self, action: usize, record: usize) -> f64 {
        self.table[action][record]
    }

    pub fn action(&self, action: usize) -> &[f64] {
        &self.table[action]
    }

    pub fn num_actions(&self) -> usize {
        self.table.len()
    }

    /// Largest `|Σ_i α^i(τ) − 1|` over actions.
    pub fn max_constraint_violation(&self) -> f64 {
        self.table
            .iter()
            .map(|row| (pairwise_sum(row) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MultiEstimatorKind {
    Bis,
    Fis,
    Ouis,
    Nbis,
    Nfis,
    Nouis,
    Bcis,
    Nbcis,
}

impl MultiEstimatorKind {
    pub const ALL: [Self; 8] = [
        Self::Bis,
        Self::Fis,
        Self::Ouis,
        Self::Nbis,
        Self::Nfis,
        Self::Nouis,
        Self::Bcis,
        Self::Nbcis,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bis => "BIS",
            Self::Fis => "FIS",
            Self::Ouis => "OUIS",
            Self::Nbis => "NBIS",
            Self::Nfis => "NFIS",
            Self::Nouis => "NOUIS",
            Self::Bcis => "BCIS",
            Self::Nbcis => "NBCIS",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    pub fn is_normalized(&self) -> bool {
        matches!(self, Self::Nbis | Self::Nfis | Self::Nouis | Self::Nbcis)
    }

    /// The unnormalized estimator whose weights this kind uses.
    pub fn base(&self) -> Self {
        match self {
            Self::Nbis => Self::Bis,
            Self::Nfis => Self::Fis,
            Self::Nouis => Self::Ouis,
            Self::Nbcis => Self::Bcis,
            k => *k,
        }
    }

    pub fn needs_reward_moments(&self) -> bool {
        self.base() == Self::Ouis
    }
}

/// A multi-policy estimator with every data-independent quantity precomputed.
///
/// Building one per family and reusing it across replications avoids
/// recomputing the `K × N` weight table for every dataset.
#[derive(Debug, Clone)]
pub struct MultiEstimator {
    kind: MultiEstimatorKind,
    fam: PolicyFamily,
    p_test: Policy,
    alphas: Option<AlphaWeights>,
    fused: Vec<f64>,
    cap: CapConfig,
}

impl MultiEstimator {
    /// `moments` is `(r̄, V_r)` and is only read by the OUIS kinds.
    pub fn new(
        kind: MultiEstimatorKind,
        fam: &PolicyFamily,
        p_test: &Policy,
        moments: Option<(&[f64], &[f64])>,
        cap: CapConfig,
    ) -> Result<Self> {
        fam.check_test_policy(p_test)?;
        let alphas = match kind.base() {
            MultiEstimatorKind::Bis | MultiEstimatorKind::Bcis => None,
            MultiEstimatorKind::Fis => None,
            MultiEstimatorKind::Ouis => {
                let (m, v) = moments.ok_or(OpeError::InvalidParameter(format!(
                    "{} needs reward moments",
                    kind.name()
                )))?;
                Some(AlphaWeights::ouis(fam, m, v)?)
            }
            _ => unreachable!("base() only returns unnormalized kinds"),
        };
        Ok(Self {
            kind,
            fam: fam.clone(),
            p_test: p_test.clone(),
            alphas,
            fused: (0..fam.num_actions()).map(|a| fam.fused_mass(a)).collect(),
            cap,
        })
    }

    pub fn kind(&self) -> MultiEstimatorKind {
        self.kind
    }

    /// Per-record weights `w_i` of the unnormalized form `Σ_i w_i r_i`.
    pub fn record_weights(&self, d: &LoggedDataset) -> Result<Vec<f64>> {
        self.fam.check_dataset(d)?;
        let n = d.len() as f64;
        d.records()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let pi = self.fam.record_policy(i).prob(r.action);
                let pt = self.p_test.prob(r.action);
                let w = match (self.kind.base(), &self.alphas) {
                    // fused form: α π_test/π_i = π_test/F, only F must be positive
                    (MultiEstimatorKind::Fis, _) => {
                        let f = self.fused[r.action];
                        if !(f > 0.0) {
                            return Err(OpeError::ZeroFusedMass { action: r.action });
                        }
                        pt / f
                    }
                    _ if !(pi > 0.0) => return Err(OpeError::UnsupportedAction { action: r.action }),
                    (MultiEstimatorKind::Bis, _) => pt / pi / n,
                    (MultiEstimatorKind::Bcis, _) => (pt / pi).min(self.cap.cap()) / n,
                    (_, Some(a)) => a.get(r.action, i) * pt / pi,
                    (_, None) => unreachable!("OUIS always carries weights"),
                };
                Ok(w)
            })
            .collect()
    }

    pub fn estimate(&self, d: &LoggedDataset) -> Result<f64> {
        let w = self.record_weights(d)?;
        let terms: Vec<f64> = w.iter().zip(d.records()).map(|(w, r)| w * r.reward).collect();
        let num = pairwise_sum(&terms);
        if self.kind.is_normalized() {
            let z = pairwise_sum(&w);
            if !(z > 0.0) {
                return Err(OpeError::ZeroNormalizer);
            }
            Ok(num / z)
        } else {
            Ok(num)
        }
    }
}

/// One-shot evaluation of any multi-policy estimator.
pub fn estimate_multi(
    kind: MultiEstimatorKind,
    d: &LoggedDataset,
    fam: &PolicyFamily,
    p_test: &Policy,
    rm: Option<&RewardModel>,
    cap: CapConfig,
) -> Result<f64> {
    let moments = rm.map(|rm| (rm.means(), rm.variances()));
    MultiEstimator::new(kind, fam, p_test, moments, cap)?.estimate(d)
}

/// `(1/N) Σ_i [π_test(τ_i)/π_i(τ_i)] r_i`.
pub fn estimate_bis_multi(d: &LoggedDataset, fam: &PolicyFamily, p_test: &Policy) -> Result<f64> {
    estimate_multi(MultiEstimatorKind::Bis, d, fam, p_test, None, CapConfig::default())
}

/// `Σ_i [π_test(τ_i)/Σ_j π_j(τ_i)] r_i`.
pub fn estimate_fis(d: &LoggedDataset, fam: &PolicyFamily, p_test: &Policy) -> Result<f64> {
    estimate_multi(MultiEstimatorKind::Fis, d, fam, p_test, None, CapConfig::default())
}

/// OUIS with the true reward moments of `rm`.
pub fn estimate_ouis(d: &LoggedDataset, fam: &PolicyFamily, p_test: &Policy, rm: &RewardModel) -> Result<f64> {
    estimate_multi(MultiEstimatorKind::Ouis, d, fam, p_test, Some(rm), CapConfig::default())
}

/// OUIS with moments estimated from the data itself.
///
/// Not an oracle: the weights depend on the sample, so the result is neither
/// unbiased nor optimal in general.
pub fn estimate_ouis_plugin(d: &LoggedDataset, fam: &PolicyFamily, p_test: &Policy) -> Result<f64> {
    let k = fam.num_actions();
    let means = empirical_means(d, k)?;
    let vars = empirical_variances(d, k)?;
    MultiEstimator::new(
        MultiEstimatorKind::Ouis,
        fam,
        p_test,
        Some((&means, &vars)),
        CapConfig::default(),
    )?
    .estimate(d)
}

/// Self-normalized version of `kind`: `Σ_i w_i r_i / Σ_i w_i`.
pub fn normalize_estimator(
    kind: MultiEstimatorKind,
    d: &LoggedDataset,
    fam: &PolicyFamily,
    p_test: &Policy,
    rm: Option<&RewardModel>,
) -> Result<f64> {
    let normalized = match kind.base() {
        MultiEstimatorKind::Bis => MultiEstimatorKind::Nbis,
        MultiEstimatorKind::Fis => MultiEstimatorKind::Nfis,
        MultiEstimatorKind::Ouis => MultiEstimatorKind::Nouis,
        _ => MultiEstimatorKind::Nbcis,
    };
    estimate_multi(normalized, d, fam, p_test, rm, CapConfig::default())
}

/// Builds a reward model whose moments are the empirical ones of `d`.
pub fn plugin_reward_model(d: &LoggedDataset, num_actions: usize) -> Result<RewardModel> {
    let means = empirical_means(d, num_actions)?;
    let vars = empirical_variances(d, num_actions)?;
    let dists = means
        .iter()
        .zip(&vars)
        .map(|(&m, &v)| RewardDist::two_point_from_moments(m, v))
        .collect::<Result<Vec<_>>>()?;
    RewardModel::new(dists)
}

/// Exact variance of the unbiased estimator with weights `alphas`.
///
/// Records are independent, so the variance is
/// `Σ_i (Σ_τ α_i² π_test² (r̄² + V_r)/π_i − (Σ_τ α_i π_test r̄)²)`.
pub fn alpha_family_variance(
    alphas: &AlphaWeights,
    fam: &PolicyFamily,
    p_test: &Policy,
    rm: &RewardModel,
) -> Result<f64> {
    fam.check_test_policy(p_test)?;
    let (means, vars) = (rm.means(), rm.variances());
    let mut per_record = Vec::with_capacity(fam.num_records());
    for i in 0..fam.num_records() {
        let pol = fam.record_policy(i);
        let mut second = Vec::new();
        let mut first = Vec::new();
        for a in 0..fam.num_actions() {
            let c = alphas.get(a, i) * p_test.prob(a);
            if c == 0.0 {
                continue;
            }
            let pi = pol.prob(a);
            if !(pi > 0.0) {
                return Err(OpeError::UnsupportedAction { action: a });
            }
            second.push(c * c * (means[a] * means[a] + vars[a]) / pi);
            first.push(c * means[a]);
        }
        let m = pairwise_sum(&first);
        per_record.push(pairwise_sum(&second) - m * m);
    }
    Ok(pairwise_sum(&per_record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pol(p: &[f64]) -> Policy {
        Policy::new(p.to_vec()).unwrap()
    }

    fn dataset(fam: &PolicyFamily, actions: &[usize], rewards: &[f64]) -> LoggedDataset {
        LoggedDataset::new(
            actions
                .iter()
                .zip(rewards)
                .zip(fam.assignment())
                .map(|((&action, &reward), &policy_id)| crate::domain::Record {
                    action,
                    reward,
                    policy_id,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn cap_ratio_examples() {
        let c = CapConfig::default();
        assert_eq!(cap_ratios(&[0.5, 20.0], &c), vec![0.5, 10.0]);
        assert_eq!(cap_ratios(&[0.5, 3.0, 10.0], &c), vec![0.5, 3.0, 10.0]);
        assert!(CapConfig::new(0.0).is_err());
        assert!(CapConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn family_validation() {
        let p = pol(&[0.5, 0.5]);
        assert!(matches!(
            PolicyFamily::new(vec![p.clone()], vec![0, 1]),
            Err(OpeError::PolicyOutOfRange { .. })
        ));
        assert!(matches!(
            PolicyFamily::new(vec![p.clone(), pol(&[1.0])], vec![0, 1]),
            Err(OpeError::DimensionMismatch { .. })
        ));
        let fam = PolicyFamily::round_robin(vec![p.clone(), p.clone()], 2).unwrap();
        assert_eq!(fam.assignment(), &[0, 0, 1, 1]);
        let bad = LoggedDataset::new(
            (0..4)
                .map(|_| crate::domain::Record {
                    action: 0,
                    reward: 0.0,
                    policy_id: 0,
                })
                .collect(),
        )
        .unwrap();
        assert!(matches!(
            fam.check_dataset(&bad),
            Err(OpeError::AssignmentMismatch { record: 2, .. })
        ));
    }

    #[test]
    fn n_equals_one_cases() {
        let fam = PolicyFamily::single(pol(&[0.25, 0.75]), 1).unwrap();
        let t = pol(&[0.5, 0.5]);
        let d = dataset(&fam, &[0], &[3.0]);
        let bis = estimate_bis_multi(&d, &fam, &t).unwrap();
        assert_eq!(bis, 0.5 / 0.25 * 3.0);
        assert_eq!(estimate_fis(&d, &fam, &t).unwrap(), bis);
        for kind in MultiEstimatorKind::ALL.into_iter().filter(|k| k.is_normalized()) {
            let rm = RewardModel::deterministic(&[3.0, 1.0]).unwrap();
            let v = estimate_multi(kind, &d, &fam, &t, Some(&rm), CapConfig::default()).unwrap();
            assert_eq!(v, 3.0);
        }
    }

    #[test]
    fn normalized_constant_rewards_exact() {
        let fam = PolicyFamily::round_robin(vec![pol(&[0.2, 0.8]), pol(&[0.6, 0.4])], 3).unwrap();
        let t = pol(&[0.7, 0.3]);
        let rm = RewardModel::deterministic(&[1.25, 1.25]).unwrap();
        let d = dataset(&fam, &[0, 1, 1, 0, 0, 1], &[1.25; 6]);
        for kind in [
            MultiEstimatorKind::Bis,
            MultiEstimatorKind::Fis,
            MultiEstimatorKind::Ouis,
            MultiEstimatorKind::Bcis,
        ] {
            let v = normalize_estimator(kind, &d, &fam, &t, Some(&rm)).unwrap();
            assert!((v - 1.25).abs() < 1e-15, "{kind:?}: {v}");
        }
    }

    #[test]
    fn ouis_deterministic_example() {
        let fam = PolicyFamily::new(vec![pol(&[0.5, 0.5]), pol(&[0.25, 0.75])], vec![0, 1]).unwrap();
        let a = AlphaWeights::ouis(&fam, &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert!((a.get(0, 0) - 0.75).abs() < 1e-15);
        assert!((a.get(0, 1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ouis_approaches_fis_for_large_variance() {
        let fam = PolicyFamily::round_robin(
            vec![pol(&[0.5, 0.3, 0.2]), pol(&[0.25, 0.25, 0.5]), pol(&[0.1, 0.6, 0.3])],
            4,
        )
        .unwrap();
        let t = pol(&[0.3, 0.3, 0.4]);
        let rm = RewardModel::two_point(&[1.0; 3], &[1e6; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let actions: Vec<usize> = fam
            .assignment()
            .iter()
            .map(|&i| fam.policies()[i].sampler().sample(&mut rng))
            .collect();
        let rewards: Vec<f64> = actions.iter().map(|&a| rm.sample(a, &mut rng)).collect();
        let d = dataset(&fam, &actions, &rewards);
        let o = estimate_ouis(&d, &fam, &t, &rm).unwrap();
        let f = estimate_fis(&d, &fam, &t).unwrap();
        assert!(((o - f) / f).abs() < 1e-6, "{o} vs {f}");
    }

    #[test]
    fn missing_moments_rejected() {
        let fam = PolicyFamily::single(pol(&[1.0]), 2).unwrap();
        assert!(MultiEstimator::new(
            MultiEstimatorKind::Nouis,
            &fam,
            &pol(&[1.0]),
            None,
            CapConfig::default()
        )
        .is_err());
    }

    #[test]
    fn unsupported_record_is_error() {
        let fam = PolicyFamily::new(vec![pol(&[1.0, 0.0]), pol(&[0.5, 0.5])], vec![0, 1]).unwrap();
        let d = dataset(&fam, &[1, 1], &[1.0, 1.0]);
        let t = pol(&[0.5, 0.5]);
        assert_eq!(
            estimate_bis_multi(&d, &fam, &t),
            Err(OpeError::UnsupportedAction { action: 1 })
        );
        // FIS only needs fused support
        let f = estimate_fis(&d, &fam, &t).unwrap();
        assert!((f - 2.0 * 0.5 / 0.5).abs() < 1e-15);
    }

    #[test]
    fn alpha_variance_zero_for_identical_policies_and_n1() {
        let fam = PolicyFamily::single(pol(&[0.4, 0.6]), 3).unwrap();
        let t = pol(&[0.5, 0.5]);
        let rm = RewardModel::two_point(&[1.0, -0.5], &[0.3, 0.1]).unwrap();
        let vb = alpha_family_variance(&AlphaWeights::bis(&fam), &fam, &t, &rm).unwrap();
        let vf = alpha_family_variance(&AlphaWeights::fis(&fam), &fam, &t, &rm).unwrap();
        assert!((vb - vf).abs() < 1e-14);
    }

    fn random_policy(rng: &mut ChaCha8Rng, k: usize) -> Policy {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        Policy::renormalized(&raw).unwrap()
    }

    proptest! {
        #[test]
        fn identical_policies_reduce_to_single(seed in any::<u64>(), k in 1usize..5, m in 1usize..4, per in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_policy(&mut rng, k);
            let t = random_policy(&mut rng, k);
            let fam = PolicyFamily::round_robin(vec![p.clone(); m], per).unwrap();
            let n = fam.num_records();
            let sampler = p.sampler();
            let actions: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
            let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
            let d = dataset(&fam, &actions, &rewards);
            let ds = LoggedDataset::single_policy(&actions, &rewards).unwrap();
            let means: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let vars: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            let rm = RewardModel::two_point(&means, &vars).unwrap();
            let bis = single::estimate_bis(&ds, &p, &t).unwrap();
            let nis = single::estimate_nis(&ds, &p, &t).unwrap();
            let tol = 1e-12 * (1.0 + bis.abs());
            for kind in [MultiEstimatorKind::Bis, MultiEstimatorKind::Fis, MultiEstimatorKind::Ouis] {
                let v = estimate_multi(kind, &d, &fam, &t, Some(&rm), CapConfig::default()).unwrap();
                prop_assert!((v - bis).abs() <= tol, "{kind:?} {v} vs {bis}");
            }
            for kind in [MultiEstimatorKind::Nbis, MultiEstimatorKind::Nfis, MultiEstimatorKind::Nouis] {
                let v = estimate_multi(kind, &d, &fam, &t, Some(&rm), CapConfig::default()).unwrap();
                prop_assert!((v - nis).abs() <= 1e-12 * (1.0 + nis.abs()), "{kind:?} {v} vs {nis}");
            }
        }

        #[test]
        fn unbiased_alphas_sum_to_one(seed in any::<u64>(), k in 1usize..5, m in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pols: Vec<Policy> = (0..m).map(|_| random_policy(&mut rng, k)).collect();
            let fam = PolicyFamily::round_robin(pols, 2).unwrap();
            let means: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let vars: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..2.0)).collect();
            prop_assert!(AlphaWeights::bis(&fam).max_constraint_violation() <= 1e-12);
            prop_assert!(AlphaWeights::fis(&fam).max_constraint_violation() <= 1e-12);
            let ouis = AlphaWeights::ouis(&fam, &means, &vars).unwrap();
            prop_assert!(ouis.max_constraint_violation() <= 1e-12);
        }
    }
}
