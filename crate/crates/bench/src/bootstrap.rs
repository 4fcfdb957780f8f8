//! Percentile bootstrap over replication-level values.

use ope_core::env::stream;
use rand::Rng;
use serde::Serialize;

use crate::error::{BenchError, Result};

/// Statistic recomputed on every resample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    /// Square root of the mean, e.g. RMSE from squared errors.
    RootMean,
}

impl Statistic {
    pub fn apply(&self, mean: f64) -> f64 {
        match self {
            Self::Mean => mean,
            Self::RootMean => mean.max(0.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Percentiles {
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

impl Percentiles {
    pub fn constant(v: f64) -> Self {
        Self { p5: v, p50: v, p95: v }
    }

    /// `value ± 1.645 se`, the normal-approximation 90% interval.
    pub fn normal(value: f64, se: f64) -> Self {
        let z = 1.644_853_626_951_472_2;
        Self {
            p5: value - z * se,
            p50: value,
            p95: value + z * se,
        }
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.p5 <= other.p95 && other.p5 <= self.p95
    }
}

/// Linear interpolation between order statistics at rank `q (n − 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Minimum resample count accepted.
pub const MIN_RESAMPLES: usize = 100;

/// 5th, 50th and 95th percentiles of `stat` over `resamples` bootstrap
/// resamples of `samples`. Deterministic given `seed`.
pub fn bootstrap_percentiles(samples: &[f64], stat: Statistic, resamples: usize, seed: u64) -> Result<Percentiles> {
    if samples.is_empty() {
        return Err(BenchError::EmptySamples);
    }
    if resamples < MIN_RESAMPLES {
        return Err(BenchError::ConfigInvalid(format!(
            "need at least {MIN_RESAMPLES} resamples, got {resamples}"
        )));
    }
    let n = samples.len();
    let mut rng = stream(seed, 0);
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut sum = 0.0;
            for _ in 0..n {
                sum += samples[rng.random_range(0..n)];
            }
            stat.apply(sum / n as f64)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok(Percentiles {
        p5: percentile(&stats, 0.05),
        p50: percentile(&stats, 0.50),
        p95: percentile(&stats, 0.95),
    })
}
