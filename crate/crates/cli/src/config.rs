//! The run configuration: one TOML document, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sinai_core::env::EnvDistribution;

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Top-level seed; every other seed is derived from it unless given.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads, 0 for all cores.
    #[serde(default)]
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub distribution: EnvDistribution,
    pub simulate: Option<Simulate>,
    pub valley: Option<Valley>,
    pub verify: Option<Verify>,
    pub experiment: Option<Experiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulate {
    pub n: u64,
    pub env_seed: Option<u64>,
    pub walk_seed: Option<u64>,
    #[serde(default)]
    pub start: i64,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
}

fn default_betas() -> Vec<f64> {
    vec![0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Valley {
    pub n: u64,
    pub env_seed: Option<u64>,
    /// Search cap in sites; defaults to the library's scale-based cap.
    pub cap: Option<i64>,
    /// Extra sites of `S` written on each side of the valley.
    #[serde(default = "default_pad")]
    pub pad: i64,
}

fn default_pad() -> i64 {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Oracle,
    Sandwich,
    Wald,
    SqrtTail,
    Band,
    Slice,
    GoodEnv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verify {
    #[serde(default = "default_checks")]
    pub checks: Vec<Check>,
    /// Random environments for the oracle and sandwich tables.
    #[serde(default = "default_environments")]
    pub environments: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Scale of the valley-based checks.
    #[serde(default = "default_verify_n")]
    pub n: u64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
}

fn default_checks() -> Vec<Check> {
    vec![Check::Oracle, Check::Sandwich, Check::Wald, Check::SqrtTail, Check::Band]
}

fn default_environments() -> usize {
    200
}

fn default_trials() -> usize {
    20_000
}

fn default_verify_n() -> u64 {
    10_000
}

fn default_replicas() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Concentration(Walks),
    BetaScaling(Walks),
    FavoriteSites(Walks),
    ZeroOne {
        max_n: u64,
        #[serde(default = "default_zero_one_envs")]
        environments: usize,
        #[serde(default = "default_walks_per_env")]
        walks_per_env: usize,
    },
    Wald {
        a: f64,
        d: f64,
        trials: usize,
    },
    SqrtTail {
        r: Vec<u64>,
        trials: usize,
    },
    Band {
        n: u64,
        c_tilde: Vec<f64>,
        bands: Vec<u32>,
        replicas: usize,
    },
    Slice {
        n: u64,
        valleys: usize,
        c_tilde: Vec<f64>,
    },
    GoodEnvRate {
        n: u64,
        beta: f64,
        replicas: usize,
    },
    Escape {
        n: u64,
        pairs: usize,
    },
}

/// Walk campaign settings; the schedule is `16 · 2^j` up to `max_n` unless given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Walks {
    pub max_n: Option<u64>,
    pub schedule: Option<Vec<u64>>,
    pub replicas: usize,
    pub betas: Option<Vec<f64>>,
    pub c3: Option<f64>,
    pub c2_quantile: Option<f64>,
    pub max_steps: Option<u64>,
    /// Favorite-site inclusion check only.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_trajectory_steps")]
    pub trajectory_steps: u64,
}

fn default_trajectories() -> usize {
    10_000
}

fn default_trajectory_steps() -> u64 {
    10_000
}

fn default_zero_one_envs() -> usize {
    50
}

fn default_walks_per_env() -> usize {
    20
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Runtime(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: Config = toml::from_str(text).map_err(|e| Failure::Validation(e.to_string()))?;
        cfg.distribution.validate()?;
        Ok(cfg)
    }

    pub fn out_dir(&self) -> Result<&Path, Failure> {
        self.out
            .as_deref()
            .ok_or_else(|| Failure::Validation("no output directory: set `out` or pass --out".into()))
    }
}
