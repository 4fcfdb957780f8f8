//! Single-behavior-policy estimators: BIS, NIS and EA.
//!
//! Every estimator is expressed in the weight form
//! `Ĵ = Σ_τ ω(τ, s) π_test(τ) r̂(τ)` and also computed directly from records,
//! so the two code paths can be cross-checked.

use serde::{Deserialize, Serialize};

use crate::domain::{empirical_means, pairwise_sum, path_counts, LoggedDataset, PathCounts, Policy, WeightVector};
use crate::error::{OpeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SingleEstimatorKind {
    Bis,
    Nis,
    Ea,
}

impl SingleEstimatorKind {
    pub const ALL: [Self; 3] = [Self::Bis, Self::Nis, Self::Ea];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bis => "BIS",
            Self::Nis => "NIS",
            Self::Ea => "EA",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    /// Weight vector for this estimator; all three depend on the path only through counts.
    pub fn weights(&self, counts: &PathCounts, p: &Policy, p_test: &Policy) -> Result<WeightVector> {
        match self {
            Self::Bis => omega_bis(counts, p),
            Self::Nis => omega_nis_from_counts(counts, p, p_test),
            Self::Ea => omega_ea(counts.num_actions()),
        }
    }

    pub fn estimate(&self, d: &LoggedDataset, p: &Policy, p_test: &Policy) -> Result<f64> {
        match self {
            Self::Bis => estimate_bis(d, p, p_test),
            Self::Nis => estimate_nis(d, p, p_test),
            Self::Ea => estimate_ea(d, p, p_test),
        }
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(OpeError::DimensionMismatch { expected, found })
    }
}

/// `Σ_τ ω(τ) π_test(τ) r̂(τ)`.
pub fn estimate_weighted(w: &WeightVector, p_test: &Policy, r_hat: &[f64]) -> Result<f64> {
    check_dims(p_test.num_actions(), w.len())?;
    check_dims(p_test.num_actions(), r_hat.len())?;
    let terms: Vec<f64> = w
        .as_slice()
        .iter()
        .zip(p_test.probs())
        .zip(r_hat)
        .map(|((w, p), r)| w * p * r)
        .collect();
    Ok(pairwise_sum(&terms))
}

/// `ω(τ) = k_τ / (N π(τ))`, with `N = Σ k_τ`. Unsampled actions get 0.
pub fn omega_bis(counts: &PathCounts, p: &Policy) -> Result<WeightVector> {
    check_dims(p.num_actions(), counts.num_actions())?;
    let n = counts.total() as f64;
    let w = counts
        .counts()
        .iter()
        .zip(p.probs())
        .enumerate()
        .map(|(action, (&k, &pi))| match (k, pi > 0.0) {
            (0, _) => Ok(0.0),
            (_, true) => Ok(k as f64 / (n * pi)),
            (_, false) => Err(OpeError::UnsupportedAction { action }),
        })
        .collect::<Result<Vec<_>>>()?;
    WeightVector::new(w)
}

/// `Σ_j π_test(τ_j)/π(τ_j)` written over counts: `Σ_τ k_τ π_test(τ)/π(τ)`.
fn nis_normalizer(counts: &PathCounts, p: &Policy, p_test: &Policy) -> Result<f64> {
    let mut terms = Vec::with_capacity(counts.num_actions());
    for (action, &k) in counts.counts().iter().enumerate() {
        if k == 0 {
            continue;
        }
        let pi = p.prob(action);
        if !(pi > 0.0) {
            return Err(OpeError::UnsupportedAction { action });
        }
        terms.push(k as f64 * p_test.prob(action) / pi);
    }
    let z = pairwise_sum(&terms);
    if z > 0.0 {
        Ok(z)
    } else {
        Err(OpeError::ZeroNormalizer)
    }
}

/// NIS weights `k_τ / (π(τ) Σ_τ' k_τ' π_test(τ')/π(τ'))`, computed from counts.
pub fn omega_nis_from_counts(counts: &PathCounts, p: &Policy, p_test: &Policy) -> Result<WeightVector> {
    check_dims(p.num_actions(), counts.num_actions())?;
    check_dims(p.num_actions(), p_test.num_actions())?;
    let z = nis_normalizer(counts, p, p_test)?;
    let w = counts
        .counts()
        .iter()
        .zip(p.probs())
        .map(|(&k, &pi)| if k == 0 { 0.0 } else { k as f64 / (pi * z) })
        .collect();
    WeightVector::new(w)
}

/// NIS weights from a logged dataset.
pub fn omega_nis(d: &LoggedDataset, p: &Policy, p_test: &Policy) -> Result<WeightVector> {
    let counts = path_counts(d, p.num_actions())?;
    omega_nis_from_counts(&counts, p, p_test)
}

/// EA weights: identically 1.
pub fn omega_ea(num_actions: usize) -> Result<WeightVector> {
    WeightVector::constant(num_actions, 1.0)
}

fn ratios(d: &LoggedDataset, p: &Policy, p_test: &Policy) -> Result<Vec<f64>> {
    check_dims(p.num_actions(), p_test.num_actions())?;
    d.check_actions(p.num_actions())?;
    d.records()
        .iter()
        .map(|r| {
            let pi = p.prob(r.action);
            if pi > 0.0 {
                Ok(p_test.prob(r.action) / pi)
            } else {
                Err(OpeError::UnsupportedAction { action: r.action })
            }
        })
        .collect()
}

/// `(1/N) Σ_i [π_test(τ_i)/π(τ_i)] r_i`.
pub fn estimate_bis(d: &LoggedDataset, p: &Policy, p_test: &Policy) -> Result<f64> {
    let w = ratios(d, p, p_test)?;
    let terms: Vec<f64> = w.iter().zip(d.records()).map(|(w, r)| w * r.reward).collect();
    Ok(pairwise_sum(&terms) / d.len() as f64)
}

/// `Σ_i w_i r_i / Σ_i w_i` with `w_i = π_test(τ_i)/π(τ_i)`.
pub fn estimate_nis(d: &LoggedDataset, p: &Policy, p_test: &Policy) -> Result<f64> {
    let w = ratios(d, p, p_test)?;
    let z = pairwise_sum(&w);
    if !(z > 0.0) {
        return Err(OpeError::ZeroNormalizer);
    }
    let terms: Vec<f64> = w.iter().zip(d.records()).map(|(w, r)| w * r.reward).collect();
    Ok(pairwise_sum(&terms) / z)
}

/// `Σ_τ π_test(τ) r̂(τ)`; the behavior policy is not used.
pub fn estimate_ea(d: &LoggedDataset, p: &Policy, p_test: &Policy) -> Result<f64> {
    check_dims(p.num_actions(), p_test.num_actions())?;
    let r_hat = empirical_means(d, p_test.num_actions())?;
    let terms: Vec<f64> = p_test.probs().iter().zip(&r_hat).map(|(p, r)| p * r).collect();
    Ok(pairwise_sum(&terms))
}

/// Approximate NIS weight `k / (k π_test + (1 − π_test) π N)`.
pub fn nis_weight_approx(k_tau: usize, n: usize, pi_tau: f64, pi_test_tau: f64) -> Result<f64> {
    let denom = k_tau as f64 * pi_test_tau + (1.0 - pi_test_tau) * pi_tau * n as f64;
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(OpeError::DegenerateDenominator(
            "k·π_test + (1 − π_test)·π·N must be positive",
        ));
    }
    Ok(k_tau as f64 / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::RewardModel;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pol(p: &[f64]) -> Policy {
        Policy::new(p.to_vec()).unwrap()
    }

    #[test]
    fn weighted_examples() {
        let w = WeightVector::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(estimate_weighted(&w, &pol(&[0.5, 0.5]), &[2.0, 4.0]).unwrap(), 3.0);
        let w = WeightVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(estimate_weighted(&w, &pol(&[0.3, 0.7]), &[2.0, 4.0]).unwrap(), 0.0);
        assert!(estimate_weighted(&w, &pol(&[1.0]), &[2.0]).is_err());
    }

    #[test]
    fn omega_bis_examples() {
        // 5 actions, counts (2,8,0,0,0), π(0)=0.2
        let p = pol(&[0.2, 0.2, 0.2, 0.2, 0.2]);
        let c = PathCounts::from_counts(vec![2, 8, 0, 0, 0]).unwrap();
        assert!((omega_bis(&c, &p).unwrap().get(0) - 1.0).abs() < 1e-15);
        let c = PathCounts::from_counts(vec![4, 6, 0, 0, 0]).unwrap();
        assert!((omega_bis(&c, &p).unwrap().get(0) - 2.0).abs() < 1e-15);
        let p = pol(&[1.0, 0.0]);
        let c = PathCounts::from_counts(vec![3, 0]).unwrap();
        assert_eq!(omega_bis(&c, &p).unwrap().get(1), 0.0);
        let c = PathCounts::from_counts(vec![2, 1]).unwrap();
        assert_eq!(omega_bis(&c, &p), Err(OpeError::UnsupportedAction { action: 1 }));
    }

    #[test]
    fn nis_single_action_and_balance() {
        let d = LoggedDataset::single_policy(&[0, 0, 0], &[1.0, 2.0, 6.0]).unwrap();
        let p = pol(&[1.0]);
        assert_eq!(omega_nis(&d, &p, &p).unwrap().as_slice(), &[1.0]);
        assert_eq!(estimate_nis(&d, &p, &p).unwrap(), 3.0);

        let p = pol(&[0.25, 0.75]);
        let d = LoggedDataset::single_policy(&[0, 1, 1, 1], &[0.0; 4]).unwrap();
        for w in omega_nis(&d, &p, &p).unwrap().as_slice() {
            assert!((w - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn nis_zero_normalizer_is_error() {
        let d = LoggedDataset::single_policy(&[0, 0], &[1.0, 1.0]).unwrap();
        let p = pol(&[0.5, 0.5]);
        let t = pol(&[0.0, 1.0]);
        assert_eq!(omega_nis(&d, &p, &t), Err(OpeError::ZeroNormalizer));
        assert_eq!(estimate_nis(&d, &p, &t), Err(OpeError::ZeroNormalizer));
    }

    #[test]
    fn single_action_collapses() {
        let d = LoggedDataset::single_policy(&[0, 0], &[2.0, 4.0]).unwrap();
        let p = pol(&[1.0]);
        for k in SingleEstimatorKind::ALL {
            assert_eq!(k.estimate(&d, &p, &p).unwrap(), 3.0);
        }
    }

    #[test]
    fn ea_exact_on_deterministic_full_coverage() {
        let rm = RewardModel::deterministic(&[0.3, -1.0, 2.5]).unwrap();
        let d = LoggedDataset::single_policy(&[0, 1, 2, 2, 0], &[0.3, -1.0, 2.5, 2.5, 0.3]).unwrap();
        let p = pol(&[0.2, 0.3, 0.5]);
        let t = pol(&[0.1, 0.6, 0.3]);
        let j = crate::domain::true_value(&t, &rm).unwrap();
        assert!((estimate_ea(&d, &p, &t).unwrap() - j).abs() < 1e-15);
    }

    #[test]
    fn nis_approx_table_values() {
        let (k, n, pi) = (7usize, 100usize, 0.05);
        let eps = 1e-9;
        assert!((nis_weight_approx(k, n, pi, 1.0 - eps).unwrap() - 1.0).abs() < 1e-6);
        let lim = k as f64 / (pi * n as f64);
        let got = nis_weight_approx(k, n, pi, eps).unwrap();
        assert!(((got - lim) / lim).abs() < 1e-6);
        let mid = 2.0 / (1.0 + pi * n as f64 / k as f64);
        assert!((nis_weight_approx(k, n, pi, 0.5).unwrap() - mid).abs() < 1e-14);
        assert!(nis_weight_approx(0, 10, 0.0, 0.0).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SingleEstimatorKind::ALL {
            assert_eq!(SingleEstimatorKind::from_name(k.name()), Some(k));
        }
        assert_eq!(SingleEstimatorKind::from_name("nis"), Some(SingleEstimatorKind::Nis));
        assert_eq!(SingleEstimatorKind::from_name("DR"), None);
    }

    fn random_instance(seed: u64, k: usize, n: usize) -> (LoggedDataset, Policy, Policy) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let p = Policy::renormalized(&raw).unwrap();
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let t = Policy::renormalized(&raw).unwrap();
        let sampler = p.sampler();
        let actions: Vec<usize> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..3.0)).collect();
        (LoggedDataset::single_policy(&actions, &rewards).unwrap(), p, t)
    }

    proptest! {
        #[test]
        fn weight_form_matches_direct(seed in any::<u64>(), k in 1usize..6, n in 1usize..40) {
            let (d, p, t) = random_instance(seed, k, n);
            let counts = path_counts(&d, k).unwrap();
            let r_hat = empirical_means(&d, k).unwrap();
            for kind in SingleEstimatorKind::ALL {
                let direct = kind.estimate(&d, &p, &t).unwrap();
                let w = kind.weights(&counts, &p, &t).unwrap();
                let via = estimate_weighted(&w, &t, &r_hat).unwrap();
                prop_assert!((direct - via).abs() <= 1e-12 * (1.0 + direct.abs()), "{kind:?}: {direct} vs {via}");
            }
            let from_d = omega_nis(&d, &p, &t).unwrap();
            let from_c = omega_nis_from_counts(&counts, &p, &t).unwrap();
            prop_assert_eq!(from_d, from_c);
        }
    }
}
