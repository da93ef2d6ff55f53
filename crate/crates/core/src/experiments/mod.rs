//! Seeded Monte Carlo campaigns over environments and walks.
//!
//! Every replica is a pure function of `(campaign seed, domain, index)`, and
//! results are collected in index order, so reports do not depend on the
//! number of workers.

mod lemmas;
mod probes;
pub mod report;
pub mod stats;

pub use lemmas::{
    calibrate_c0, probe_escape, C0Calibration, verify_band_expectation, verify_good_env_rate, verify_slice_bound,
    verify_sqrt_tail, verify_wald_bounds, BandCell, BandReport, EscapeReport, GoodEnvRateReport,
    SliceReport, SqrtTailReport, TailPoint, WaldReport,
};
pub use probes::{
    inclusion_holds, probe_beta_scaling, probe_concentration, probe_favorite_sites, probe_zero_one,
    BetaSummary,
    BetaScalingReport, ConcentrationReport, ConcentrationRow, FavoriteReport, TrajectoryCheck,
    ZeroOneReport,
};

use serde::{Deserialize, Serialize};

use crate::env::{EnvDistribution, Environment};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::seeds::replica_seeds;

/// Runs `f(0..count)` on `workers` threads (0 = all cores) and returns the
/// results in index order.
pub fn par_map<T, F>(workers: usize, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if workers != 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("thread pool");
            return pool.install(|| (0..count).into_par_iter().map(&f).collect());
        }
    }
    let _ = workers;
    (0..count).map(f).collect()
}

/// Settings shared by the walk probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Campaign {
    pub dist: EnvDistribution,
    /// Strictly increasing times at which statistics are taken.
    pub schedule: Vec<u64>,
    pub replicas: usize,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    pub seed: u64,
    /// Constant `c3` of the favorite-site distance `c4 = c3 / c2²`.
    #[serde(default = "default_c3")]
    pub c3: f64,
    /// Quantile of terminal `max ℒ*(n)/n` taken as `c2`.
    #[serde(default = "default_c2_quantile")]
    pub c2_quantile: f64,
    /// Largest admissible schedule entry.
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

fn default_betas() -> Vec<f64> {
    vec![0.5, 0.75, 0.875, 0.9375]
}

fn default_c3() -> f64 {
    64.0
}

fn default_c2_quantile() -> f64 {
    0.1
}

fn default_max_steps() -> u64 {
    100_000_000
}

/// `16 · 2^j` for every `j` with `16 · 2^j ≤ max_n`.
pub fn geometric_schedule(max_n: u64) -> Vec<u64> {
    std::iter::successors(Some(16u64), |n| n.checked_mul(2))
        .take_while(|n| *n <= max_n)
        .collect()
}

impl Campaign {
    pub fn new(dist: EnvDistribution, max_n: u64, replicas: usize, seed: u64) -> Self {
        Campaign {
            dist,
            schedule: geometric_schedule(max_n),
            replicas,
            betas: default_betas(),
            seed,
            c3: default_c3(),
            c2_quantile: default_c2_quantile(),
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if self.schedule.is_empty() || self.schedule[0] == 0 {
            return Err(Error::param("schedule", "must be nonempty and positive"));
        }
        if self.schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param("schedule", "must be strictly increasing"));
        }
        let last = *self.schedule.last().unwrap();
        if last > self.max_steps {
            return Err(Error::BudgetExhausted(format!(
                "schedule reaches {last} steps, budget is {}",
                self.max_steps
            )));
        }
        if self.replicas == 0 {
            return Err(Error::param("replicas", "must be at least 1"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(0.0..1.0).contains(*b)) {
            return Err(Error::param("betas", format!("{b} not in [0, 1)")));
        }
        if !(self.c3 > 0.0) {
            return Err(Error::param("c3", "must be positive"));
        }
        if !(self.c2_quantile > 0.0 && self.c2_quantile < 1.0) {
            return Err(Error::param("c2_quantile", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Seeds and a fresh potential for replica `index` of `domain`.
pub(crate) fn replica(
    dist: &EnvDistribution,
    seed: u64,
    domain: &str,
    index: usize,
) -> Result<(u64, u64, Potential)> {
    let (env_seed, walk_seed) = replica_seeds(seed, domain, index as u64);
    let env = Environment::new(dist.clone(), env_seed)?;
    Ok((env_seed, walk_seed, Potential::from_env(env, 0, 0)?))
}
