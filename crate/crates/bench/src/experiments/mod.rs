//! Experiment runners. Each returns report rows in a fixed order; replications
//! run in parallel but results are collected by index, so output depends only
//! on the configuration.

pub mod dominance;
pub mod ea_bias;
pub mod figure1;
pub mod multi_policy;

use rayon::prelude::*;

use crate::bootstrap::Percentiles;
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::report::{BenchRow, Metric};

pub use dominance::run_dominance_scan;
pub use ea_bias::run_ea_bias;
pub use figure1::run_figure1;
pub use multi_policy::run_multi_policy;

/// Validates `cfg` and dispatches on its kind.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Figure1 => run_figure1(cfg),
        ExperimentKind::MultiPolicy => run_multi_policy(cfg),
        ExperimentKind::EaBias => run_ea_bias(cfg),
        ExperimentKind::Dominance => run_dominance_scan(cfg),
    }
}

/// `f(0), …, f(n − 1)` computed in parallel, in index order.
pub(crate) fn replicate<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n as u64).into_par_iter().map(f).collect()
}

pub(crate) struct RowBuilder<'a> {
    pub cfg: &'a ExperimentConfig,
    pub param_name: &'static str,
}

impl RowBuilder<'_> {
    pub fn row(
        &self,
        estimator: &str,
        param_value: f64,
        metric: Metric,
        value: f64,
        ci: Percentiles,
        reps: usize,
    ) -> BenchRow {
        BenchRow {
            experiment: self.cfg.kind.id().to_owned(),
            estimator: estimator.to_owned(),
            param_name: self.param_name.to_owned(),
            param_value,
            metric,
            value,
            p5: ci.p5,
            p50: ci.p50,
            p95: ci.p95,
            reps: reps as u64,
            seed: self.cfg.seed,
        }
    }
}
