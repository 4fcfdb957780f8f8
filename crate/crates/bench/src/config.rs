//! Experiment configuration: per-experiment defaults, a TOML overlay and CLI overrides.
//!
//! Precedence is defaults < config file < command-line flags. Validation runs
//! once on the merged result, before any sampling.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use ope_core::multi::MultiEstimatorKind;
use ope_core::single::SingleEstimatorKind;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Figure1,
    MultiPolicy,
    EaBias,
    Dominance,
}

impl ExperimentKind {
    /// Identifier written into the `experiment` column.
    pub fn id(&self) -> &'static str {
        match self {
            Self::Figure1 => "figure1",
            Self::MultiPolicy => "multi_policy",
            Self::EaBias => "ea_bias",
            Self::Dominance => "dominance_scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Number of actions `K`.
    pub k: usize,
    /// Records per dataset (single-policy experiments).
    pub n: usize,
    /// Replications `R`; for the dominance scan, the number of random instances.
    pub reps: usize,
    pub p_grid: Vec<f64>,
    /// Number of behavior policies `M`.
    pub policies: usize,
    pub per_policy: usize,
    pub spread: f64,
    pub cap: f64,
    /// Success probability of the multi-policy rewards.
    pub reward_p: f64,
    /// Minimum action probability of generated behavior policies.
    pub floor: f64,
    /// Replications per instance in the dominance scan.
    pub inner_reps: usize,
    /// Episode length cap of the adaptive sampler.
    pub adaptive_cap: usize,
    pub estimators: Vec<String>,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

/// `{0.05, 0.10, …, 1.00}`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

pub const DEFAULT_SEED: u64 = 20_160_101;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 2000;

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            k: 20,
            n: 100,
            reps: 10_000,
            p_grid: default_p_grid(),
            policies: 10,
            per_policy: 30,
            spread: 1.0,
            cap: ope_core::multi::CapConfig::DEFAULT_CAP,
            reward_p: 0.9,
            floor: ope_core::env::FAMILY_FLOOR,
            inner_reps: 100_000,
            adaptive_cap: ope_core::env::DEFAULT_ADAPTIVE_CAP,
            estimators: Vec::new(),
            seed: DEFAULT_SEED,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            out: None,
            format: OutputFormat::Csv,
        };
        match kind {
            ExperimentKind::Figure1 => Self {
                estimators: names(SingleEstimatorKind::ALL.iter().map(|k| k.name())),
                ..base
            },
            ExperimentKind::MultiPolicy => Self {
                k: 5,
                reps: 400,
                estimators: names(MultiEstimatorKind::ALL.iter().map(|k| k.name())),
                ..base
            },
            ExperimentKind::EaBias => Self {
                k: 1,
                reps: 1_000_000,
                ..base
            },
            ExperimentKind::Dominance => Self {
                k: 5,
                reps: 50,
                per_policy: 1,
                floor: 0.02,
                ..base
            },
        }
    }

    /// Defaults, then the file at `path` if any.
    pub fn load(kind: ExperimentKind, path: Option<&Path>) -> Result<Self> {
        let mut cfg = Self::defaults(kind);
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| BenchError::ConfigInvalid(format!("{}: {e}", path.display())))?;
            let file: ConfigFile =
                toml::from_str(&text).map_err(|e| BenchError::ConfigInvalid(format!("{}: {e}", path.display())))?;
            cfg.apply(file)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, f: ConfigFile) -> Result<()> {
        if let Some(kind) = f.experiment {
            if kind != self.kind {
                return Err(BenchError::ConfigInvalid(format!(
                    "config file is for {}, but {} was requested",
                    kind.id(),
                    self.kind.id()
                )));
            }
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = f.$field { self.$field = v; } )* };
        }
        take!(
            k,
            n,
            reps,
            p_grid,
            policies,
            per_policy,
            spread,
            cap,
            reward_p,
            floor,
            inner_reps,
            adaptive_cap,
            estimators,
            seed,
            bootstrap_resamples,
            format
        );
        if let Some(out) = f.out {
            self.out = Some(out);
        }
        Ok(())
    }

    pub fn single_estimators(&self) -> Result<Vec<SingleEstimatorKind>> {
        self.estimators
            .iter()
            .map(|n| {
                SingleEstimatorKind::from_name(n)
                    .ok_or_else(|| BenchError::ConfigInvalid(format!("unknown estimator {n:?} for {}", self.kind.id())))
            })
            .collect()
    }

    pub fn multi_estimators(&self) -> Result<Vec<MultiEstimatorKind>> {
        self.estimators
            .iter()
            .map(|n| {
                MultiEstimatorKind::from_name(n)
                    .ok_or_else(|| BenchError::ConfigInvalid(format!("unknown estimator {n:?} for {}", self.kind.id())))
            })
            .collect()
    }

    /// Checks every invariant, including that estimator names resolve.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::ConfigInvalid(msg));
        if self.reps < 2 {
            return bad(format!("reps must be at least 2, got {}", self.reps));
        }
        if self.bootstrap_resamples < 100 {
            return bad(format!(
                "bootstrap_resamples must be at least 100, got {}",
                self.bootstrap_resamples
            ));
        }
        match self.kind {
            ExperimentKind::Figure1 => {
                if self.k < 2 || !self.k.is_multiple_of(2) {
                    return bad(format!("k must be even and at least 2, got {}", self.k));
                }
                if self.n == 0 {
                    return bad("n must be positive".into());
                }
                if self.p_grid.is_empty() {
                    return bad("p_grid is empty".into());
                }
                if let Some(p) = self.p_grid.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
                    return bad(format!("p_grid entry {p} outside (0, 1]"));
                }
                if self.estimators.is_empty() {
                    return bad("no estimators selected".into());
                }
                self.single_estimators()?;
            }
            ExperimentKind::MultiPolicy | ExperimentKind::Dominance => {
                if self.k == 0 || self.policies == 0 || self.per_policy == 0 {
                    return bad("k, policies and per_policy must be positive".into());
                }
                if !(0.0..=1.0).contains(&self.spread) {
                    return bad(format!("spread {} outside [0, 1]", self.spread));
                }
                if !(self.cap > 0.0) {
                    return bad(format!("cap must be positive, got {}", self.cap));
                }
                if !(self.reward_p > 0.0 && self.reward_p <= 1.0) {
                    return bad(format!("reward_p {} outside (0, 1]", self.reward_p));
                }
                if !(self.floor >= 0.0 && self.floor * self.k as f64 <= 1.0) {
                    return bad(format!("floor {} too large for k = {}", self.floor, self.k));
                }
                if self.kind == ExperimentKind::MultiPolicy {
                    if self.estimators.is_empty() {
                        return bad("no estimators selected".into());
                    }
                    self.multi_estimators()?;
                } else {
                    if self.inner_reps < 2 {
                        return bad("inner_reps must be at least 2".into());
                    }
                    if !self.estimators.is_empty() {
                        return bad("the dominance scan always compares BIS and FIS; remove `estimators`".into());
                    }
                }
            }
            ExperimentKind::EaBias => {
                if self.adaptive_cap == 0 {
                    return bad("adaptive_cap must be positive".into());
                }
                if !self.estimators.is_empty() {
                    return bad("ea-bias has a fixed estimator set; remove `estimators`".into());
                }
            }
        }
        Ok(())
    }
}

fn names<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    it.map(str::to_owned).collect()
}

/// On-disk form: every key optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentKind>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub p_grid: Option<Vec<f64>>,
    pub policies: Option<usize>,
    pub per_policy: Option<usize>,
    pub spread: Option<f64>,
    pub cap: Option<f64>,
    pub reward_p: Option<f64>,
    pub floor: Option<f64>,
    pub inner_reps: Option<usize>,
    pub adaptive_cap: Option<usize>,
    pub estimators: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub bootstrap_resamples: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}
