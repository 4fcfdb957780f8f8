//! Scan of the BIS − FIS variance gap over random policy families.

use ope_core::analysis::{analytic_var_bis_multi, analytic_var_fis_multi};
use ope_core::env::{
    derive_seed, make_multi_policy_instance, sample_dataset, stream, MultiPolicyInstance, MultiPolicySpec,
};
use ope_core::multi::{CapConfig, MultiEstimator, MultiEstimatorKind};
use rand::Rng;

use super::{replicate, RowBuilder};
use crate::bootstrap::Percentiles;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{BenchRow, Metric};
use crate::stats::{mean, spearman, std_error, variance_with_se};

/// Every fifth instance uses identical uniform policies.
const IDENTICAL_EVERY: usize = 5;

#[derive(Debug, Clone)]
pub struct DominanceInstance {
    pub index: usize,
    pub instance: MultiPolicyInstance,
    pub analytic_bis: f64,
    pub analytic_fis: f64,
    pub empirical_bis: f64,
    pub empirical_bis_se: f64,
    pub empirical_fis: f64,
    pub empirical_fis_se: f64,
    /// Paired estimate of `Var(BIS) − Var(FIS)` from the same datasets.
    pub empirical_gap: f64,
    pub empirical_gap_se: f64,
}

impl DominanceInstance {
    pub fn analytic_gap(&self) -> f64 {
        self.analytic_bis - self.analytic_fis
    }
}

/// Shape of instance `i`: `K` in `2..=cfg.k` (or 1), `M` in `2..=cfg.policies`
/// (or 1) and spread uniform on `(0, 1]`, except that every fifth instance
/// has spread 0.
pub fn scan_spec(cfg: &ExperimentConfig, i: usize) -> MultiPolicySpec {
    let mut rng = stream(derive_seed(cfg.seed, 0), i as u64);
    let k = if cfg.k >= 2 { rng.random_range(2..=cfg.k) } else { cfg.k };
    let m = if cfg.policies >= 2 {
        rng.random_range(2..=cfg.policies)
    } else {
        cfg.policies
    };
    let spread = if i % IDENTICAL_EVERY == IDENTICAL_EVERY - 1 {
        0.0
    } else {
        1.0 - rng.random::<f64>()
    };
    MultiPolicySpec {
        k,
        policies: m,
        per_policy: cfg.per_policy,
        spread,
        reward_p: cfg.reward_p,
        floor: cfg.floor,
    }
}

pub fn evaluate_instance(cfg: &ExperimentConfig, i: usize) -> Result<DominanceInstance> {
    let inst = make_multi_policy_instance(&scan_spec(cfg, i), derive_seed(cfg.seed, 1 + i as u64))?;
    let bis = MultiEstimator::new(
        MultiEstimatorKind::Bis,
        &inst.family,
        &inst.p_test,
        None,
        CapConfig::default(),
    )?;
    let fis = MultiEstimator::new(
        MultiEstimatorKind::Fis,
        &inst.family,
        &inst.p_test,
        None,
        CapConfig::default(),
    )?;
    let data_seed = derive_seed(derive_seed(cfg.seed, 1 << 40), i as u64);
    let pairs = replicate(cfg.inner_reps, |r| {
        let d = sample_dataset(&inst.rewards, &inst.family, &mut stream(data_seed, r))?;
        Ok((bis.estimate(&d)?, fis.estimate(&d)?))
    })?;
    let xb: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let xf: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (vb, vb_se) = variance_with_se(&xb);
    let (vf, vf_se) = variance_with_se(&xf);
    let (mb, mf) = (mean(&xb), mean(&xf));
    let n = xb.len() as f64;
    let diff: Vec<f64> = xb
        .iter()
        .zip(&xf)
        .map(|(b, f)| ((b - mb).powi(2) - (f - mf).powi(2)) * n / (n - 1.0))
        .collect();
    Ok(DominanceInstance {
        index: i,
        analytic_bis: analytic_var_bis_multi(&inst.family, &inst.p_test, &inst.rewards)?,
        analytic_fis: analytic_var_fis_multi(&inst.family, &inst.p_test, &inst.rewards)?,
        instance: inst,
        empirical_bis: vb,
        empirical_bis_se: vb_se,
        empirical_fis: vf,
        empirical_fis_se: vf_se,
        empirical_gap: vb - vf,
        empirical_gap_se: std_error(&diff),
    })
}

/// All scan instances, in index order.
pub fn dominance_instances(cfg: &ExperimentConfig) -> Result<Vec<DominanceInstance>> {
    (0..cfg.reps).map(|i| evaluate_instance(cfg, i)).collect()
}

pub fn run_dominance_scan(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let scan = dominance_instances(cfg)?;
    let b = RowBuilder {
        cfg,
        param_name: "instance",
    };
    let reps = cfg.inner_reps;
    let mut rows = Vec::with_capacity(6 * scan.len() + 2);
    for s in &scan {
        let i = s.index as f64;
        let c = Percentiles::constant;
        rows.push(b.row("BIS", i, Metric::Analytic, s.analytic_bis, c(s.analytic_bis), reps));
        rows.push(b.row(
            "BIS",
            i,
            Metric::Variance,
            s.empirical_bis,
            Percentiles::normal(s.empirical_bis, s.empirical_bis_se),
            reps,
        ));
        rows.push(b.row("FIS", i, Metric::Analytic, s.analytic_fis, c(s.analytic_fis), reps));
        rows.push(b.row(
            "FIS",
            i,
            Metric::Variance,
            s.empirical_fis,
            Percentiles::normal(s.empirical_fis, s.empirical_fis_se),
            reps,
        ));
        rows.push(b.row(
            "BIS-FIS",
            i,
            Metric::VarianceGap,
            s.analytic_gap(),
            c(s.analytic_gap()),
            reps,
        ));
        rows.push(b.row(
            "BIS-FIS",
            i,
            Metric::EmpiricalGap,
            s.empirical_gap,
            Percentiles::normal(s.empirical_gap, s.empirical_gap_se),
            reps,
        ));
    }
    let analytic: Vec<f64> = scan.iter().map(DominanceInstance::analytic_gap).collect();
    let empirical: Vec<f64> = scan.iter().map(|s| s.empirical_gap).collect();
    let min_gap = analytic.iter().copied().fold(f64::INFINITY, f64::min);
    let rho = spearman(&analytic, &empirical);
    let n = scan.len() as f64;
    rows.push(b.row(
        "BIS-FIS",
        n,
        Metric::MinGap,
        min_gap,
        Percentiles::constant(min_gap),
        reps,
    ));
    rows.push(b.row(
        "BIS-FIS",
        n,
        Metric::RankCorrelation,
        rho,
        Percentiles::constant(rho),
        reps,
    ));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            reps: 5,
            inner_reps: 2000,
            ..ExperimentConfig::defaults(ExperimentKind::Dominance)
        }
    }

    #[test]
    fn identical_policies_have_zero_gap() {
        let s = evaluate_instance(&small(), IDENTICAL_EVERY - 1).unwrap();
        assert_eq!(s.instance.family.policies()[0], s.instance.family.policies()[1]);
        assert!(s.analytic_gap().abs() <= 1e-12, "{}", s.analytic_gap());
        assert!(s.empirical_gap.abs() <= 1e-12);
    }

    #[test]
    fn gaps_are_non_negative() {
        let rows = run_dominance_scan(&small()).unwrap();
        assert_eq!(rows.len(), 6 * 5 + 2);
        let min = rows.iter().find(|r| r.metric == Metric::MinGap).unwrap();
        assert!(min.value >= -1e-12);
    }
}
