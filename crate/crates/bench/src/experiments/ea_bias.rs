//! EA under adaptive stopping versus an unbiased per-draw accounting.

use ope_core::analysis::ea_adaptive_bias_analytic;
use ope_core::env::{sample_adaptive_stop, stream};

use super::{replicate, RowBuilder};
use crate::bootstrap::Percentiles;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::report::{BenchRow, Metric};
use crate::stats::{mean, std_error};

/// Monte Carlo summary of the adaptive-stopping episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EaBiasSummary {
    pub episodes: usize,
    pub ea_mean: f64,
    pub ea_se: f64,
    pub analytic: f64,
    /// `Σ ones / Σ length` over all episodes.
    pub pooled: f64,
    /// Delta-method standard error of `pooled`.
    pub pooled_se: f64,
    pub true_value: f64,
    pub capped_episodes: usize,
}

pub fn simulate_ea_bias(cfg: &ExperimentConfig) -> Result<EaBiasSummary> {
    let logs = replicate(cfg.reps, |r| {
        let log = sample_adaptive_stop(&mut stream(cfg.seed, r), cfg.adaptive_cap)?;
        Ok((log.ea_estimate(), log.ones() as f64, log.len() as f64, log.capped()))
    })?;
    let ea: Vec<f64> = logs.iter().map(|l| l.0).collect();
    let ones: Vec<f64> = logs.iter().map(|l| l.1).collect();
    let lens: Vec<f64> = logs.iter().map(|l| l.2).collect();
    let (mo, ml) = (mean(&ones), mean(&lens));
    let pooled = mo / ml;
    // linearized residuals of the ratio estimator
    let resid: Vec<f64> = ones.iter().zip(&lens).map(|(o, l)| (o - pooled * l) / ml).collect();
    let analytic = ea_adaptive_bias_analytic();
    Ok(EaBiasSummary {
        episodes: cfg.reps,
        ea_mean: mean(&ea),
        ea_se: std_error(&ea),
        analytic: analytic.expectation,
        pooled,
        pooled_se: std_error(&resid),
        true_value: analytic.true_value,
        capped_episodes: logs.iter().filter(|l| l.3).count(),
    })
}

pub fn run_ea_bias(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    let s = simulate_ea_bias(cfg)?;
    let b = RowBuilder { cfg, param_name: "cap" };
    let cap = cfg.adaptive_cap as f64;
    let gap = s.ea_mean - s.analytic;
    Ok(vec![
        b.row(
            "EA",
            cap,
            Metric::Mean,
            s.ea_mean,
            Percentiles::normal(s.ea_mean, s.ea_se),
            s.episodes,
        ),
        b.row(
            "EA",
            cap,
            Metric::Analytic,
            s.analytic,
            Percentiles::constant(s.analytic),
            s.episodes,
        ),
        b.row(
            "EA",
            cap,
            Metric::Gap,
            gap,
            Percentiles::normal(gap, s.ea_se),
            s.episodes,
        ),
        b.row(
            "IS",
            cap,
            Metric::Mean,
            s.pooled,
            Percentiles::normal(s.pooled, s.pooled_se),
            s.episodes,
        ),
        b.row(
            "true",
            cap,
            Metric::TrueValue,
            s.true_value,
            Percentiles::constant(s.true_value),
            s.episodes,
        ),
    ])
}
