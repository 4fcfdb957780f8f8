//! RMSE of the multi-policy estimators on one synthetic policy family.

use ope_core::env::{
    derive_seed, make_multi_policy_instance, sample_dataset, stream, MultiPolicyInstance, MultiPolicySpec,
};
use ope_core::multi::{CapConfig, MultiEstimator};
use ope_core::true_value;

use super::{replicate, RowBuilder};
use crate::bootstrap::{bootstrap_percentiles, Statistic};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{BenchRow, Metric};
use crate::stats::mean;

pub fn instance_spec(cfg: &ExperimentConfig) -> MultiPolicySpec {
    MultiPolicySpec {
        k: cfg.k,
        policies: cfg.policies,
        per_policy: cfg.per_policy,
        spread: cfg.spread,
        reward_p: cfg.reward_p,
        floor: cfg.floor,
    }
}

/// Raw estimates from one multi-policy run.
#[derive(Debug, Clone)]
pub struct MultiPolicyRun {
    pub instance: MultiPolicyInstance,
    pub true_value: f64,
    /// `[estimator][replication]`, estimators in configuration order.
    pub estimates: Vec<Vec<f64>>,
}

/// OUIS kinds receive the instance's true reward moments.
pub fn multi_policy_estimates(cfg: &ExperimentConfig) -> Result<MultiPolicyRun> {
    let kinds = cfg.multi_estimators()?;
    let inst = make_multi_policy_instance(&instance_spec(cfg), derive_seed(cfg.seed, 0))?;
    let j = true_value(&inst.p_test, &inst.rewards)?;
    let cap = CapConfig::new(cfg.cap)?;
    let estimators = kinds
        .iter()
        .map(|&k| {
            MultiEstimator::new(
                k,
                &inst.family,
                &inst.p_test,
                Some((inst.rewards.means(), inst.rewards.variances())),
                cap,
            )
        })
        .collect::<ope_core::Result<Vec<_>>>()?;
    let data_seed = derive_seed(cfg.seed, 1);
    let per_rep = replicate(cfg.reps, |r| {
        let d = sample_dataset(&inst.rewards, &inst.family, &mut stream(data_seed, r))?;
        estimators
            .iter()
            .map(|e| Ok(e.estimate(&d)?))
            .collect::<Result<Vec<f64>>>()
    })?;
    let estimates = (0..kinds.len())
        .map(|e| per_rep.iter().map(|v| v[e]).collect())
        .collect();
    Ok(MultiPolicyRun {
        instance: inst,
        true_value: j,
        estimates,
    })
}

pub fn run_multi_policy(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let kinds = cfg.multi_estimators()?;
    let run = multi_policy_estimates(cfg)?;
    let b = RowBuilder {
        cfg,
        param_name: "spread",
    };
    kinds
        .iter()
        .zip(&run.estimates)
        .enumerate()
        .map(|(e, (kind, xs))| {
            let sq: Vec<f64> = xs.iter().map(|x| (x - run.true_value).powi(2)).collect();
            let ci = bootstrap_percentiles(
                &sq,
                Statistic::RootMean,
                cfg.bootstrap_resamples,
                derive_seed(cfg.seed, 2 + e as u64),
            )?;
            Ok(b.row(kind.name(), cfg.spread, Metric::Rmse, mean(&sq).sqrt(), ci, cfg.reps))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    fn small(spread: f64) -> ExperimentConfig {
        ExperimentConfig {
            reps: 60,
            spread,
            bootstrap_resamples: 100,
            ..ExperimentConfig::defaults(ExperimentKind::MultiPolicy)
        }
    }

    #[test]
    fn identical_policies_make_bis_and_fis_agree() {
        let cfg = ExperimentConfig {
            estimators: vec!["BIS".into(), "FIS".into()],
            ..small(0.0)
        };
        let run = multi_policy_estimates(&cfg).unwrap();
        for (b, f) in run.estimates[0].iter().zip(&run.estimates[1]) {
            assert!((b - f).abs() <= 1e-12, "{b} vs {f}");
        }
    }

    #[test]
    fn one_rmse_row_per_estimator() {
        let rows = run_multi_policy(&small(1.0)).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            assert_eq!(r.metric, Metric::Rmse);
            assert!(r.value >= 0.0 && r.p5 <= r.p50 && r.p50 <= r.p95);
        }
    }
}
