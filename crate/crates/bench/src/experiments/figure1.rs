//! MSE of BIS, NIS and EA across the scaled-Bernoulli `p` grid.

use ope_core::env::{
    behavior_policy_linear, default_test_policy, derive_seed, make_scaled_bernoulli, sample_dataset, stream,
};
use ope_core::multi::PolicyFamily;
use ope_core::true_value;

use super::{replicate, RowBuilder};
use crate::bootstrap::{bootstrap_percentiles, Statistic};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{BenchRow, Metric};
use crate::stats::mean;

/// Squared errors of every configured estimator at one grid point, indexed
/// `[estimator][replication]`. All estimators see the same datasets.
pub fn figure1_squared_errors(cfg: &ExperimentConfig, p_index: usize) -> Result<Vec<Vec<f64>>> {
    let kinds = cfg.single_estimators()?;
    let p = cfg.p_grid[p_index];
    let env = make_scaled_bernoulli(cfg.k, p)?;
    let behavior = behavior_policy_linear(cfg.k)?;
    let target = default_test_policy(cfg.k)?;
    let fam = PolicyFamily::single(behavior.clone(), cfg.n)?;
    let j = true_value(&target, env.reward_model())?;
    let grid_seed = derive_seed(cfg.seed, p_index as u64);
    let per_rep = replicate(cfg.reps, |r| {
        let d = sample_dataset(env.reward_model(), &fam, &mut stream(grid_seed, r))?;
        kinds
            .iter()
            .map(|k| Ok((k.estimate(&d, &behavior, &target)? - j).powi(2)))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok((0..kinds.len())
        .map(|e| per_rep.iter().map(|v| v[e]).collect())
        .collect())
}

pub fn run_figure1(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let kinds = cfg.single_estimators()?;
    let b = RowBuilder { cfg, param_name: "p" };
    let mut rows = Vec::with_capacity(cfg.p_grid.len() * kinds.len());
    for (pi, &p) in cfg.p_grid.iter().enumerate() {
        let errs = figure1_squared_errors(cfg, pi)?;
        let mut point: Vec<BenchRow> = kinds
            .iter()
            .zip(&errs)
            .enumerate()
            .map(|(e, (kind, se))| {
                let boot_seed = derive_seed(cfg.seed, (1 << 32) + (pi * kinds.len() + e) as u64);
                let ci = bootstrap_percentiles(se, Statistic::Mean, cfg.bootstrap_resamples, boot_seed)?;
                Ok(b.row(kind.name(), p, Metric::Mse, mean(se), ci, cfg.reps))
            })
            .collect::<Result<_>>()?;
        point.sort_by(|a, c| a.estimator.cmp(&c.estimator));
        rows.extend(point);
    }
    rows.sort_by(|a, c| {
        a.param_value
            .total_cmp(&c.param_value)
            .then_with(|| a.estimator.cmp(&c.estimator))
    });
    Ok(rows)
}
