//! Variance and MSE computations.
//!
//! * total-variance split of a single-policy estimator into reward noise
//!   (`v_int`) and path randomness (`v_path`)
//! * the fixed-path MSE that the optimal weights minimize
//! * closed-form variances of multi-policy BIS and FIS
//! * the harmonic-mean inequality behind their ordering
//! * the exact bias of EA under stop-at-first-failure logging

use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{pairwise_sum, PathCounts, Policy, RewardModel, WeightVector};
use crate::error::{OpeError, Result};
use crate::multi::PolicyFamily;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceDecomposition {
    pub v_int: f64,
    pub v_path: f64,
    pub total: f64,
    /// `E[Ĵ]` under the same path distribution.
    pub expectation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseBreakdown {
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
}

/// Default cap on the number of count vectors visited in exact mode.
pub const DEFAULT_ENUMERATION_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarianceMode {
    /// Visit every count vector with its multinomial probability.
    Exact { limit: f64 },
    /// Average over `paths` sampled count vectors.
    MonteCarlo { paths: usize, seed: u64 },
}

impl VarianceMode {
    pub fn exact() -> Self {
        Self::Exact {
            limit: DEFAULT_ENUMERATION_LIMIT,
        }
    }
}

/// Which paths enter the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathFilter {
    #[default]
    All,
    /// Only paths that sample every action; probabilities are conditioned on that event.
    FullCoverage,
}

/// `C(n + k − 1, k − 1)` as a float, the number of count vectors.
pub fn count_vector_space(n: usize, k: usize) -> f64 {
    let mut c = 1.0f64;
    for i in 1..k {
        c = c * (n + i) as f64 / i as f64;
    }
    c
}

/// Calls `f(counts, probability)` for every count vector of `n` draws from `p`.
/// Zero-probability vectors are skipped.
pub fn for_each_count_vector<F>(p: &Policy, n: usize, limit: f64, mut f: F) -> Result<()>
where
    F: FnMut(&PathCounts, f64) -> Result<()>,
{
    let k = p.num_actions();
    let size = count_vector_space(n, k);
    if size > limit {
        return Err(OpeError::EnumerationTooLarge { size, limit });
    }
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_p: Vec<f64> = p.probs().iter().map(|x| x.ln()).collect();

    let mut visit = |counts: &[usize]| -> Result<()> {
        let mut ln_prob = ln_fact[n];
        for (a, &c) in counts.iter().enumerate() {
            if c > 0 {
                if p.prob(a) == 0.0 {
                    return Ok(());
                }
                ln_prob += c as f64 * ln_p[a] - ln_fact[c];
            }
        }
        f(&PathCounts::from_counts(counts.to_vec())?, ln_prob.exp())
    };
    let mut counts = vec![0usize; k];
    compositions(&mut counts, 0, n, &mut visit)?;
    Ok(())
}

fn compositions<F>(counts: &mut [usize], slot: usize, left: usize, visit: &mut F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    if slot + 1 == counts.len() {
        counts[slot] = left;
        return visit(counts);
    }
    for c in 0..=left {
        counts[slot] = c;
        compositions(counts, slot + 1, left - c, visit)?;
    }
    Ok(())
}

/// Conditional mean and variance of `Σ ω π_test r̂` given the counts.
///
/// Unsampled actions have `r̂ = 0` deterministically, so they add nothing to
/// either moment whatever their weight.
fn conditional_moments(w: &WeightVector, c: &PathCounts, p_test: &Policy, rm: &RewardModel) -> (f64, f64) {
    let mut mean = Vec::with_capacity(c.num_actions());
    let mut var = Vec::with_capacity(c.num_actions());
    for a in 0..c.num_actions() {
        let k = c.get(a);
        if k == 0 {
            continue;
        }
        let u = w.get(a) * p_test.prob(a);
        mean.push(u * rm.means()[a]);
        var.push(u * u * rm.variances()[a] / k as f64);
    }
    (pairwise_sum(&mean), pairwise_sum(&var))
}

struct Accumulator {
    probs: Vec<f64>,
    means: Vec<f64>,
    vars: Vec<f64>,
}

impl Accumulator {
    fn finish(self, unbiased: bool) -> Result<VarianceDecomposition> {
        let total_p = pairwise_sum(&self.probs);
        if !(total_p > 0.0) {
            return Err(OpeError::InvalidParameter(
                "no path has positive probability under the filter".into(),
            ));
        }
        let shift = self.means[0];
        let d: Vec<f64> = self
            .probs
            .iter()
            .zip(&self.means)
            .map(|(p, m)| p * (m - shift))
            .collect();
        let mean_dev = pairwise_sum(&d) / total_p;
        let sq: Vec<f64> = self
            .probs
            .iter()
            .zip(&self.means)
            .map(|(p, m)| {
                let e = (m - shift) - mean_dev;
                p * e * e
            })
            .collect();
        let mut v_path = pairwise_sum(&sq) / total_p;
        if unbiased && self.probs.len() > 1 {
            let n = self.probs.len() as f64;
            v_path *= n / (n - 1.0);
        }
        let iv: Vec<f64> = self.probs.iter().zip(&self.vars).map(|(p, v)| p * v).collect();
        let v_int = pairwise_sum(&iv) / total_p;
        Ok(VarianceDecomposition {
            v_int,
            v_path,
            total: v_int + v_path,
            expectation: shift + mean_dev,
        })
    }
}

/// Splits the variance of `Σ_τ ω(τ,s) π_test(τ) r̂(τ)` into
/// `v_int = E_s[Var(Ĵ | s)]` and `v_path = Var_s(E[Ĵ | s])`.
///
/// `rule` maps counts to weights. Exact mode enumerates count vectors; Monte
/// Carlo mode samples paths and uses the unbiased sample variance for `v_path`.
pub fn decompose_variance<F>(
    rule: F,
    p: &Policy,
    p_test: &Policy,
    rm: &RewardModel,
    n: usize,
    mode: VarianceMode,
    filter: PathFilter,
) -> Result<VarianceDecomposition>
where
    F: Fn(&PathCounts) -> Result<WeightVector>,
{
    let k = p.num_actions();
    for found in [p_test.num_actions(), rm.num_actions()] {
        if found != k {
            return Err(OpeError::DimensionMismatch { expected: k, found });
        }
    }
    if n == 0 {
        return Err(OpeError::EmptyDataset);
    }
    let mut acc = Accumulator {
        probs: Vec::new(),
        means: Vec::new(),
        vars: Vec::new(),
    };
    let mut visit = |c: &PathCounts, prob: f64| -> Result<()> {
        if filter == PathFilter::FullCoverage && c.counts().contains(&0) {
            return Ok(());
        }
        let w = rule(c)?;
        if w.len() != k {
            return Err(OpeError::DimensionMismatch {
                expected: k,
                found: w.len(),
            });
        }
        let (m, v) = conditional_moments(&w, c, p_test, rm);
        acc.probs.push(prob);
        acc.means.push(m);
        acc.vars.push(v);
        Ok(())
    };
    match mode {
        VarianceMode::Exact { limit } => {
            for_each_count_vector(p, n, limit, &mut visit)?;
            acc.finish(false)
        }
        VarianceMode::MonteCarlo { paths, seed } => {
            if paths < 2 {
                return Err(OpeError::InvalidParameter("need at least two paths".into()));
            }
            let sampler = p.sampler();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut counts = vec![0usize; k];
            for _ in 0..paths {
                counts.iter_mut().for_each(|c| *c = 0);
                for _ in 0..n {
                    counts[sampler.sample(&mut rng)] += 1;
                }
                visit(&PathCounts::from_counts(counts.clone())?, 1.0)?;
            }
            acc.finish(true)
        }
    }
}

/// Fixed-path MSE `(Σ (ω−1) π_test r̄)² + Σ ω² π_test² V_r / k`.
pub fn mse_at_fixed_path(
    w: &WeightVector,
    counts: &PathCounts,
    p_test: &Policy,
    rm: &RewardModel,
) -> Result<MseBreakdown> {
    let k = p_test.num_actions();
    for found in [w.len(), counts.num_actions(), rm.num_actions()] {
        if found != k {
            return Err(OpeError::DimensionMismatch { expected: k, found });
        }
    }
    let mut bias = Vec::with_capacity(k);
    let mut var = Vec::with_capacity(k);
    for a in 0..k {
        let pt = p_test.prob(a);
        let (om, r, v) = (w.get(a), rm.means()[a], rm.variances()[a]);
        bias.push((om - 1.0) * pt * r);
        let u = om * pt;
        if u == 0.0 || v == 0.0 {
            continue;
        }
        match counts.get(a) {
            0 => return Err(OpeError::InfiniteConditionalVariance { action: a }),
            kc => var.push(u * u * v / kc as f64),
        }
    }
    let b = pairwise_sum(&bias);
    let variance = pairwise_sum(&var);
    Ok(MseBreakdown {
        bias_sq: b * b,
        variance,
        mse: b * b + variance,
    })
}

fn check_family(fam: &PolicyFamily, p_test: &Policy, rm: &RewardModel) -> Result<()> {
    let k = fam.num_actions();
    for found in [p_test.num_actions(), rm.num_actions()] {
        if found != k {
            return Err(OpeError::DimensionMismatch { expected: k, found });
        }
    }
    Ok(())
}

/// `E[(π_test r)²] = π_test² (r̄² + V_r)` per action.
fn second_moments(p_test: &Policy, rm: &RewardModel) -> Vec<f64> {
    (0..p_test.num_actions())
        .map(|a| {
            let pt = p_test.prob(a);
            let m = rm.means()[a];
            pt * pt * (m * m + rm.variances()[a])
        })
        .collect()
}

/// Exact variance of multi-policy BIS:
/// `(1/N²) Σ_τ π_test²(r̄² + V_r) Σ_i 1/π_i(τ) − J²/N`.
pub fn analytic_var_bis_multi(fam: &PolicyFamily, p_test: &Policy, rm: &RewardModel) -> Result<f64> {
    check_family(fam, p_test, rm)?;
    let n = fam.num_records() as f64;
    let s2 = second_moments(p_test, rm);
    let mut terms = Vec::new();
    for (a, &s) in s2.iter().enumerate() {
        if p_test.prob(a) == 0.0 {
            continue;
        }
        let probs = fam.record_probs(a);
        if probs.iter().any(|&x| !(x > 0.0)) {
            return Err(OpeError::UnsupportedAction { action: a });
        }
        let inv: Vec<f64> = probs.iter().map(|x| 1.0 / x).collect();
        terms.push(s * pairwise_sum(&inv));
    }
    let j = crate::domain::true_value(p_test, rm)?;
    Ok(pairwise_sum(&terms) / (n * n) - j * j / n)
}

/// Exact variance of FIS:
/// `Σ_τ π_test²(r̄² + V_r)/F(τ) − Σ_i (Σ_τ π_test r̄ π_i(τ)/F(τ))²` with `F = Σ_i π_i`.
pub fn analytic_var_fis_multi(fam: &PolicyFamily, p_test: &Policy, rm: &RewardModel) -> Result<f64> {
    check_family(fam, p_test, rm)?;
    let s2 = second_moments(p_test, rm);
    let mut first = Vec::new();
    let mut fused = vec![0.0; fam.num_actions()];
    for (a, &s) in s2.iter().enumerate() {
        if p_test.prob(a) == 0.0 {
            continue;
        }
        let f = fam.fused_mass(a);
        if !(f > 0.0) {
            return Err(OpeError::ZeroFusedMass { action: a });
        }
        fused[a] = f;
        first.push(s / f);
    }
    let per_record: Vec<f64> = (0..fam.num_records())
        .map(|i| {
            let pol = fam.record_policy(i);
            let t: Vec<f64> = (0..fam.num_actions())
                .filter(|&a| fused[a] > 0.0)
                .map(|a| p_test.prob(a) * rm.means()[a] * pol.prob(a) / fused[a])
                .collect();
            let m = pairwise_sum(&t);
            m * m
        })
        .collect();
    Ok(pairwise_sum(&first) - pairwise_sum(&per_record))
}

/// `Var(BIS) − Var(FIS)`; never negative up to rounding.
pub fn variance_gap(fam: &PolicyFamily, p_test: &Policy, rm: &RewardModel) -> Result<f64> {
    Ok(analytic_var_bis_multi(fam, p_test, rm)? - analytic_var_fis_multi(fam, p_test, rm)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicMeanReport {
    /// `(1/N²) Σ 1/a_i`
    pub lhs: f64,
    /// `1 / Σ a_i`
    pub rhs: f64,
    pub holds: bool,
    /// `lhs` and `rhs` agree to a relative `1e-12`; happens iff all `a_i` are equal.
    pub is_equality: bool,
}

pub fn harmonic_mean_inequality(a: &[f64]) -> Result<HarmonicMeanReport> {
    if a.is_empty() {
        return Err(OpeError::InvalidParameter("empty vector".into()));
    }
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
        return Err(OpeError::NonPositiveEntry { index, value });
    }
    let n = a.len() as f64;
    let inv: Vec<f64> = a.iter().map(|x| 1.0 / x).collect();
    let lhs = pairwise_sum(&inv) / (n * n);
    let rhs = 1.0 / pairwise_sum(a);
    Ok(HarmonicMeanReport {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-15,
        is_equality: (lhs - rhs).abs() <= 1e-12 * rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EaBiasAnalytic {
    /// `E[EA] = 1 − ln 2`
    pub expectation: f64,
    /// Mean of a Bernoulli(1/2) reward.
    pub true_value: f64,
    /// `expectation − true_value = 1/2 − ln 2`
    pub bias: f64,
}

/// Exact EA expectation when an action with Bernoulli(1/2) rewards is sampled
/// until its first zero: `Σ_k (1/2)^{k+1} k/(k+1) = 1 − ln 2`.
pub fn ea_adaptive_bias_analytic() -> EaBiasAnalytic {
    let expectation = 1.0 - LN_2;
    EaBiasAnalytic {
        expectation,
        true_value: 0.5,
        bias: expectation - 0.5,
    }
}

/// The same expectation summed term by term for `k = 0..=terms`.
pub fn ea_adaptive_series(terms: usize) -> f64 {
    // smallest terms first
    (0..=terms)
        .rev()
        .map(|k| 0.5f64.powi(k as i32 + 1) * k as f64 / (k as f64 + 1.0))
        .sum()
}
