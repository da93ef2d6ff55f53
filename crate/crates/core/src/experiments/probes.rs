//! Exploratory probes of the concentration theorems along a time schedule.

use serde::{Deserialize, Serialize};

use super::stats::{bootstrap_ci, linear_fit, median, quantile, variance, Estimate};
use super::{par_map, replica, Campaign};
use crate::env::{EnvDistribution, Environment};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::seeds::derive_seed;
use crate::walk::{concentration_radius, run, run_checkpoints, stats, LocalTimeField};

/// Statistics of one replica at one schedule time. `y[b]`, `min_y[b]` follow
/// the campaign's `betas`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub replica: usize,
    pub env_seed: u64,
    pub walk_seed: u64,
    pub n: u64,
    pub l_star: u64,
    pub fav_min: i64,
    pub fav_max: i64,
    /// Running minimum of `max F - min F` over the schedule so far.
    pub min_spread: u64,
    /// Running maximum of `ℒ*(n)/n`.
    pub max_ratio: f64,
    pub y: Vec<u64>,
    /// Running minimum of `Y_{n,β}`.
    pub min_y: Vec<u64>,
}

fn trace(campaign: &Campaign, index: usize) -> Result<Vec<ConcentrationRow>> {
    let (env_seed, walk_seed, mut pot) = replica(&campaign.dist, campaign.seed, "walk", index)?;
    let mut rows: Vec<ConcentrationRow> = Vec::with_capacity(campaign.schedule.len());
    let mut failure = None;
    run_checkpoints(&mut pot, walk_seed, &campaign.schedule, 0, |n, field, _| {
        let s = match stats(field) {
            Ok(s) => s,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        let mut y = Vec::with_capacity(campaign.betas.len());
        for &b in &campaign.betas {
            match concentration_radius(field, b) {
                Ok(k) => y.push(k),
                Err(e) => {
                    failure.get_or_insert(e);
                    return;
                }
            }
        }
        let ratio = s.l_star as f64 / n as f64;
        let (min_y, min_spread, max_ratio) = match rows.last() {
            Some(p) => (
                p.min_y.iter().zip(&y).map(|(a, b)| *a.min(b)).collect(),
                p.min_spread.min(s.fav_spread),
                p.max_ratio.max(ratio),
            ),
            None => (y.clone(), s.fav_spread, ratio),
        };
        rows.push(ConcentrationRow {
            replica: index,
            env_seed,
            walk_seed,
            n,
            l_star: s.l_star,
            fav_min: s.favorites[0],
            fav_max: *s.favorites.last().unwrap(),
            min_spread,
            max_ratio,
            y,
            min_y,
        });
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

fn traces(campaign: &Campaign, workers: usize) -> Result<Vec<Vec<ConcentrationRow>>> {
    campaign.validate()?;
    par_map(workers, campaign.replicas, |i| trace(campaign, i))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaSummary {
    pub beta: f64,
    /// Terminal running minimum of `Y_{n,β}`, one per replica.
    pub terminal_min_y: Vec<u64>,
    pub median: f64,
    pub q90: f64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub schedule: Vec<u64>,
    pub betas: Vec<f64>,
    pub replicas: usize,
    /// Rows sorted by `(replica, n)`.
    pub rows: Vec<ConcentrationRow>,
    pub summaries: Vec<BetaSummary>,
    /// Median over replicas of the terminal `max ℒ*(n)/n`.
    pub median_max_ratio: f64,
    /// Running minima never increase and running maxima never decrease.
    pub trackers_monotone: bool,
    pub pass: bool,
}

impl ConcentrationReport {
    /// CSV header and records; `y_<β>` and `min_y_<β>` columns follow `betas`.
    pub fn csv(&self) -> Result<String> {
        let mut header: Vec<String> = [
            "replica", "env_seed", "walk_seed", "n", "l_star", "fav_min", "fav_max", "min_spread",
            "max_ratio",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(self.betas.iter().map(|b| format!("y_{b}")));
        header.extend(self.betas.iter().map(|b| format!("min_y_{b}")));
        let records = self.rows.iter().map(|r| {
            let mut v = vec![
                r.replica.to_string(),
                r.env_seed.to_string(),
                r.walk_seed.to_string(),
                r.n.to_string(),
                r.l_star.to_string(),
                r.fav_min.to_string(),
                r.fav_max.to_string(),
                r.min_spread.to_string(),
                r.max_ratio.to_string(),
            ];
            v.extend(r.y.iter().map(|x| x.to_string()));
            v.extend(r.min_y.iter().map(|x| x.to_string()));
            v
        });
        super::report::records_to_csv("concentration", 1, &header, records)
    }
}

fn monotone(rows: &[ConcentrationRow]) -> bool {
    rows.windows(2).all(|w| {
        w[1].min_spread <= w[0].min_spread
            && w[1].max_ratio >= w[0].max_ratio
            && w[1].min_y.iter().zip(&w[0].min_y).all(|(a, b)| a <= b)
    })
}

pub fn probe_concentration(campaign: &Campaign, workers: usize) -> Result<ConcentrationReport> {
    let traces = traces(campaign, workers)?;
    let trackers_monotone = traces.iter().all(|t| monotone(t));
    let terminal: Vec<&ConcentrationRow> = traces.iter().map(|t| t.last().unwrap()).collect();
    let summaries = campaign
        .betas
        .iter()
        .enumerate()
        .map(|(b, &beta)| {
            let ys: Vec<u64> = terminal.iter().map(|r| r.min_y[b]).collect();
            let yf: Vec<f64> = ys.iter().map(|y| *y as f64).collect();
            BetaSummary {
                beta,
                median: median(&yf),
                q90: quantile(&yf, 0.9),
                max: ys.iter().copied().max().unwrap_or(0),
                terminal_min_y: ys,
            }
        })
        .collect();
    let ratios: Vec<f64> = terminal.iter().map(|r| r.max_ratio).collect();
    Ok(ConcentrationReport {
        schedule: campaign.schedule.clone(),
        betas: campaign.betas.clone(),
        replicas: campaign.replicas,
        rows: traces.into_iter().flatten().collect(),
        summaries,
        median_max_ratio: median(&ratios),
        pass: trackers_monotone,
        trackers_monotone,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaScalingReport {
    pub betas: Vec<f64>,
    /// Median terminal minimum of `Y_{n,β}` per `β`.
    pub medians: Vec<f64>,
    /// Slope of `log median` on `log(1/(1-β))`; `None` when the medians are all equal.
    pub slope: Option<f64>,
    /// 95% bootstrap interval of the slope over replicas.
    pub ci: Option<(f64, f64)>,
    /// Single replica: the interval is meaningless.
    pub flagged: bool,
    pub pass: bool,
}

fn scaling_slope(betas: &[f64], medians: &[f64]) -> Option<f64> {
    if medians.windows(2).all(|w| w[0] == w[1]) {
        return None;
    }
    let xs: Vec<f64> = betas.iter().map(|b| (1.0 / (1.0 - b)).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    linear_fit(&xs, &ys).map(|(s, _)| s)
}

/// Growth exponent of the concentration radius in `1/(1-β)`.
pub fn probe_beta_scaling(campaign: &Campaign, workers: usize) -> Result<BetaScalingReport> {
    let mut distinct = campaign.betas.clone();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::param("betas", "need at least four distinct values"));
    }
    let report = probe_concentration(campaign, workers)?;
    let medians: Vec<f64> = report.summaries.iter().map(|s| s.median).collect();
    let slope = scaling_slope(&campaign.betas, &medians);
    let terminal: Vec<Vec<u64>> = (0..campaign.replicas)
        .map(|r| report.summaries.iter().map(|s| s.terminal_min_y[r]).collect())
        .collect();
    let ci = bootstrap_ci(&terminal, 1000, 0.95, derive_seed(campaign.seed, "bootstrap", 0), |rows| {
        let meds: Vec<f64> = (0..campaign.betas.len())
            .map(|b| median(&rows.iter().map(|r| r[b] as f64).collect::<Vec<_>>()))
            .collect();
        scaling_slope(&campaign.betas, &meds)
    });
    Ok(BetaScalingReport {
        betas: campaign.betas.clone(),
        medians,
        pass: slope.is_some_and(|s| s <= 2.5),
        slope,
        ci,
        flagged: campaign.replicas < 2,
    })
}

/// Outcome of the favorite-site inclusion check for one distance `c4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCheck {
    pub c4: f64,
    /// Trajectories where a window of radius `c4/2` holds more than `n - ℒ*(n)`.
    pub premise_held: u64,
    /// Among those, trajectories with favorite spread above `c4`.
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FavoriteReport {
    /// Terminal running minimum of the favorite spread, one per replica.
    pub terminal_min_spread: Vec<u64>,
    /// `c2`: the configured lower quantile of terminal `max ℒ*(n)/n`.
    pub c2: f64,
    /// `c4 = c3 / c2²`
    pub c4: f64,
    pub trajectories: usize,
    pub trajectory_steps: u64,
    pub checks: Vec<TrajectoryCheck>,
    pub pass: bool,
}

/// Largest local time carried by a window `[x - r, x + r]`.
fn max_window_mass(field: &LocalTimeField, r: u64) -> u64 {
    let (_, counts) = field.dense();
    let width = (2 * r + 1) as usize;
    if width >= counts.len() {
        return field.total();
    }
    let mut mass: u64 = counts[..width].iter().sum();
    let mut best = mass;
    for i in width..counts.len() {
        mass = mass + counts[i] - counts[i - width];
        best = best.max(mass);
    }
    best
}

/// Checks, on one field, that a window of radius `c4/2` holding more than
/// `n - ℒ*(n)` forces the favorite spread below `c4`.
pub fn inclusion_holds(field: &LocalTimeField, c4: f64) -> Result<(bool, bool)> {
    let s = stats(field)?;
    let r = (c4 / 2.0).floor().max(0.0) as u64;
    let premise = max_window_mass(field, r) > field.total() - s.l_star;
    Ok((premise, !premise || s.fav_spread as f64 <= c4))
}

pub fn probe_favorite_sites(
    campaign: &Campaign,
    trajectories: usize,
    trajectory_steps: u64,
    workers: usize,
) -> Result<FavoriteReport> {
    if trajectory_steps == 0 {
        return Err(Error::param("trajectory_steps", "must be positive"));
    }
    let traces = traces(campaign, workers)?;
    let terminal_min_spread: Vec<u64> = traces.iter().map(|t| t.last().unwrap().min_spread).collect();
    let ratios: Vec<f64> = traces.iter().map(|t| t.last().unwrap().max_ratio).collect();
    let c2 = quantile(&ratios, campaign.c2_quantile);
    let c4 = campaign.c3 / (c2 * c2);
    let mut c4s: Vec<f64> = (0..8).map(|k| f64::from(1u32 << k)).collect();
    c4s.push(c4);
    let per = par_map(workers, trajectories, |t| -> Result<Vec<(bool, bool)>> {
        let (_, walk_seed, mut pot) = replica(&campaign.dist, campaign.seed, "inclusion", t)?;
        let out = run(&mut pot, walk_seed, trajectory_steps, 0)?;
        c4s.iter().map(|c| inclusion_holds(&out.field, *c)).collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let checks: Vec<TrajectoryCheck> = c4s
        .iter()
        .enumerate()
        .map(|(k, &c)| TrajectoryCheck {
            c4: c,
            premise_held: per.iter().filter(|p| p[k].0).count() as u64,
            violations: per.iter().filter(|p| !p[k].1).count() as u64,
        })
        .collect();
    Ok(FavoriteReport {
        terminal_min_spread,
        c2,
        c4,
        trajectories,
        trajectory_steps,
        pass: checks.iter().all(|c| c.violations == 0),
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroOneReport {
    pub environments: usize,
    pub walks_per_env: usize,
    /// Variance across environments of the per-environment mean of `max_n ℒ*(n)/n`.
    pub between: Option<f64>,
    /// Mean over environments of the within-environment variance.
    pub within: Estimate,
    /// `between / within`, with a bootstrap interval over environments.
    pub ratio: Option<f64>,
    pub ratio_ci: Option<(f64, f64)>,
    /// Smaller than 50 environments × 20 walks.
    pub undersized: bool,
}

/// Dispersion of `max_n ℒ*(n)/n` between and within environments.
pub fn probe_zero_one(
    dist: &EnvDistribution,
    schedule: &[u64],
    environments: usize,
    walks_per_env: usize,
    seed: u64,
    workers: usize,
) -> Result<ZeroOneReport> {
    if environments == 0 || walks_per_env < 2 {
        return Err(Error::param("walks_per_env", "need an environment and two walks each"));
    }
    let per_env = par_map(workers, environments, |e| -> Result<Vec<f64>> {
        let env = Environment::new(dist.clone(), derive_seed(seed, "zero-one/env", e as u64))?;
        let mut pot = Potential::from_env(env, 0, 0)?;
        (0..walks_per_env)
            .map(|w| {
                let ws = derive_seed(seed, "zero-one/walk", (e * walks_per_env + w) as u64);
                let mut best = 0.0f64;
                let mut failure = None;
                run_checkpoints(&mut pot, ws, schedule, 0, |n, f, _| match stats(f) {
                    Ok(s) => best = best.max(s.l_star as f64 / n as f64),
                    Err(err) => {
                        failure.get_or_insert(err);
                    }
                })?;
                failure.map_or(Ok(best), Err)
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let dispersion = |rows: &[&Vec<f64>]| -> (Option<f64>, f64) {
        let means: Vec<f64> = rows.iter().map(|r| super::stats::mean(r)).collect();
        let within = super::stats::mean(&rows.iter().map(|r| variance(r)).collect::<Vec<_>>());
        let between = (rows.len() > 1).then(|| variance(&means));
        (between, within)
    };
    let all: Vec<&Vec<f64>> = per_env.iter().collect();
    let (between, _) = dispersion(&all);
    let within = Estimate::mean_of(&per_env.iter().map(|r| variance(r)).collect::<Vec<_>>());
    let ratio = between.map(|b| b / within.value);
    let ratio_ci = if environments > 1 {
        bootstrap_ci(&per_env, 500, 0.95, derive_seed(seed, "zero-one/bootstrap", 0), |rows| {
            let (b, w) = dispersion(rows);
            b.map(|b| b / w)
        })
    } else {
        None
    };
    Ok(ZeroOneReport {
        environments,
        walks_per_env,
        between,
        within,
        ratio,
        ratio_ci,
        undersized: environments < 50 || walks_per_env < 20,
    })
}
