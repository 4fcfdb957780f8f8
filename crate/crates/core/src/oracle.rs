//! Closed-form MSE-optimal weights.
//!
//! These need the true reward moments and so are only usable in simulation.
//! [`OracleInputs::plug_in`] builds the same inputs from empirical moments;
//! the results are then tagged [`MomentSource::PlugIn`] and carry no
//! optimality guarantee.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::domain::{
    empirical_means, empirical_variances, pairwise_sum, path_counts, LoggedDataset, PathCounts, Policy, RewardModel,
    WeightVector,
};
use crate::error::{OpeError, Result};
use crate::multi::PolicyFamily;

/// Where the reward moments came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MomentSource {
    /// True moments of the environment.
    Oracle,
    /// Moments estimated from the same data; not an oracle.
    PlugIn,
}

/// Counts, reward moments and test-policy probabilities, all indexed by action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleInputs {
    pub counts: Vec<usize>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub p_test: Vec<f64>,
    pub source: MomentSource,
}

impl OracleInputs {
    pub fn oracle(counts: &PathCounts, rm: &RewardModel, p_test: &Policy) -> Result<Self> {
        Self::build(
            counts.counts().to_vec(),
            rm.means().to_vec(),
            rm.variances().to_vec(),
            p_test.probs().to_vec(),
            MomentSource::Oracle,
        )
    }

    pub fn plug_in(d: &LoggedDataset, p_test: &Policy) -> Result<Self> {
        let k = p_test.num_actions();
        Self::build(
            path_counts(d, k)?.counts().to_vec(),
            empirical_means(d, k)?,
            empirical_variances(d, k)?,
            p_test.probs().to_vec(),
            MomentSource::PlugIn,
        )
    }

    pub fn build(
        counts: Vec<usize>,
        means: Vec<f64>,
        variances: Vec<f64>,
        p_test: Vec<f64>,
        source: MomentSource,
    ) -> Result<Self> {
        let k = counts.len();
        if k == 0 {
            return Err(OpeError::EmptyActionSet);
        }
        for len in [means.len(), variances.len(), p_test.len()] {
            if len != k {
                return Err(OpeError::DimensionMismatch {
                    expected: k,
                    found: len,
                });
            }
        }
        if let Some((index, &value)) = variances.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(OpeError::InvalidParameter(format!(
                "variance {index} is negative ({value})"
            )));
        }
        Ok(Self {
            counts,
            means,
            variances,
            p_test,
            source,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.counts.len()
    }
}

/// MSE-optimal weights at fixed counts:
/// `ω*(τ) = [k r̄ / (π_test V_r)] · [Σ π_test r̄] / [1 + Σ k r̄²/V_r]`.
///
/// Actions with `π_test(τ) = 0` do not enter the MSE; they are left out of the
/// sums and get weight 0.
pub fn optimal_weights_single_policy(inp: &OracleInputs) -> Result<WeightVector> {
    let relevant: Vec<usize> = (0..inp.num_actions()).filter(|&a| inp.p_test[a] > 0.0).collect();
    if let Some(&action) = relevant.iter().find(|&&a| inp.variances[a] == 0.0) {
        return Err(OpeError::ZeroVariance { action });
    }
    let value: Vec<f64> = relevant.iter().map(|&a| inp.p_test[a] * inp.means[a]).collect();
    let precision: Vec<f64> = relevant
        .iter()
        .map(|&a| inp.counts[a] as f64 * inp.means[a] * inp.means[a] / inp.variances[a])
        .collect();
    let scale = pairwise_sum(&value) / (1.0 + pairwise_sum(&precision));
    let mut w = vec![0.0; inp.num_actions()];
    for &a in &relevant {
        w[a] = inp.counts[a] as f64 * inp.means[a] / (inp.p_test[a] * inp.variances[a]) * scale;
    }
    WeightVector::new(w)
}

/// Single-action optimum `r̄² / (r̄² + V_r/k)`; 1 when `V_r = 0`.
pub fn optimal_weight_single_action(r_bar: f64, v_r: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(OpeError::InvalidParameter("k must be at least 1".into()));
    }
    if !(v_r >= 0.0) {
        return Err(OpeError::InvalidParameter(format!("variance {v_r} is negative")));
    }
    if v_r == 0.0 {
        return if r_bar == 0.0 {
            Err(OpeError::DegenerateAction)
        } else {
            Ok(1.0)
        };
    }
    let m2 = r_bar * r_bar;
    Ok(m2 / (m2 + v_r / k as f64))
}

/// Per-record optimal unbiased weights for action `tau`:
/// `α_i ∝ π_i(τ) / (r̄²(1 − π_i(τ)) + V_r)`, normalized to sum to one.
pub fn optimal_unbiased_alphas(tau: usize, fam: &PolicyFamily, r_bar: f64, v_r: f64) -> Result<Vec<f64>> {
    if tau >= fam.num_actions() {
        return Err(OpeError::ActionOutOfRange {
            action: tau,
            num_actions: fam.num_actions(),
        });
    }
    let m2 = r_bar * r_bar;
    let raw = fam
        .record_probs(tau)
        .into_iter()
        .map(|p| {
            let denom = m2 * (1.0 - p) + v_r;
            if denom > 0.0 {
                Ok(p / denom)
            } else {
                Err(OpeError::DegenerateDenominator("r̄²(1 − π_i) + V_r must be positive"))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let total = pairwise_sum(&raw);
    if !(total > 0.0) {
        return Err(OpeError::ZeroFusedMass { action: tau });
    }
    Ok(raw.iter().map(|x| x / total).collect())
}

/// Variance contributed by action `tau` under per-record weights `alphas`:
/// `π_test² Σ_i α_i² (r̄²(1 − π_i) + V_r)/π_i`.
///
/// Records with `α_i = 0` contribute nothing; a positive weight on a record
/// that cannot produce `tau` makes the objective infinite.
pub fn per_action_objective(alphas: &[f64], probs: &[f64], p_test_tau: f64, r_bar: f64, v_r: f64) -> f64 {
    let m2 = r_bar * r_bar;
    let terms: Vec<f64> = alphas
        .iter()
        .zip(probs)
        .map(|(&a, &p)| {
            if a == 0.0 {
                0.0
            } else if p > 0.0 {
                a * a * (m2 * (1.0 - p) + v_r) / p
            } else {
                f64::INFINITY
            }
        })
        .collect();
    p_test_tau * p_test_tau * pairwise_sum(&terms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaOptimalityReport {
    pub objective_at_optimum: f64,
    pub objective_at_uniform: f64,
    /// `min(objective(candidate) − objective(α_opt))` over uniform and random candidates.
    pub min_gap: f64,
    pub candidates: usize,
}

impl AlphaOptimalityReport {
    pub fn passes(&self) -> bool {
        self.min_gap >= -1e-10
    }
}

/// Number of random simplex points tried by [`verify_alpha_optimality`].
pub const ALPHA_SAMPLES: usize = 200;

/// Compares α_opt against the uniform weights and [`ALPHA_SAMPLES`] uniform
/// draws from the simplex.
pub fn verify_alpha_optimality(
    tau: usize,
    fam: &PolicyFamily,
    p_test_tau: f64,
    r_bar: f64,
    v_r: f64,
    seed: u64,
) -> Result<AlphaOptimalityReport> {
    let probs = fam.record_probs(tau);
    let n = probs.len();
    let opt = optimal_unbiased_alphas(tau, fam, r_bar, v_r)?;
    let f_opt = per_action_objective(&opt, &probs, p_test_tau, r_bar, v_r);
    let uniform = vec![1.0 / n as f64; n];
    let f_uni = per_action_objective(&uniform, &probs, p_test_tau, r_bar, v_r);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap = f_uni - f_opt;
    let mut point = vec![0.0; n];
    for _ in 0..ALPHA_SAMPLES {
        for x in point.iter_mut() {
            *x = Exp1.sample(&mut rng);
        }
        let s: f64 = point.iter().sum();
        point.iter_mut().for_each(|x| *x /= s);
        let gap = per_action_objective(&point, &probs, p_test_tau, r_bar, v_r) - f_opt;
        min_gap = min_gap.min(gap);
    }
    Ok(AlphaOptimalityReport {
        objective_at_optimum: f_opt,
        objective_at_uniform: f_uni,
        min_gap,
        candidates: ALPHA_SAMPLES + 1,
    })
}
