//! Quantitative checks of the potential and excursion estimates.

use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, mean, Estimate};
use super::{par_map, replica};
use crate::analysis::{
    basic_valley_for, gamma_n, is_good_environment, ladder_epochs, slice_upper_bound,
    BasicValley, GoodEnvParams,
};
use crate::chain::{expected_local_time_profile, wald_bound, WaldBounds};
use crate::env::EnvDistribution;
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::walk::{SeededSteps, Walker};

const SCAN_CAP: i64 = 10_000_000;

fn check_trials(trials: usize, floor: usize) -> Result<()> {
    if trials < floor {
        return Err(Error::param("trials", format!("{trials} < {floor}")));
    }
    Ok(())
}

/// Whether `S - S_0` reaches `≤ -a` before `≥ d`; `None` if neither within `cap`.
fn down_first(pot: &mut Potential, a: f64, d: f64, cap: i64) -> Result<Option<bool>> {
    let mut k = 1;
    while k <= cap {
        let end = (k + 1023).min(cap);
        pot.ensure(k, end)?;
        for j in k..=end {
            let s = pot.s(j);
            if s <= -a {
                return Ok(Some(true));
            }
            if s >= d {
                return Ok(Some(false));
            }
        }
        k = end + 1;
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldReport {
    pub a: f64,
    pub d: f64,
    pub trials: usize,
    pub bounds: WaldBounds,
    /// `Q[V⁻_a < V⁺_d]`
    pub down_first: Estimate,
    /// `Q[V⁻_a > V⁺_d]`
    pub up_first: Estimate,
    pub undecided: u64,
    pub pass: bool,
}

pub fn verify_wald_bounds(
    dist: &EnvDistribution,
    a: f64,
    d: f64,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<WaldReport> {
    check_trials(trials, 1000)?;
    let bounds = wald_bound(a, d, dist.eta0())?;
    let outcomes = par_map(workers, trials, |i| {
        let (_, _, mut pot) = replica(dist, seed, "wald", i)?;
        down_first(&mut pot, a, d, SCAN_CAP)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let down = outcomes.iter().filter(|o| **o == Some(true)).count() as u64;
    let up = outcomes.iter().filter(|o| **o == Some(false)).count() as u64;
    let down_first = Estimate::proportion(down, trials as u64);
    let up_first = Estimate::proportion(up, trials as u64);
    Ok(WaldReport {
        a,
        d,
        trials,
        bounds,
        pass: down_first.within(bounds.down_first) && up_first.within(bounds.up_first),
        down_first,
        up_first,
        undecided: trials as u64 - down - up,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub r: u64,
    /// `Q[V⁻_0 > r]`
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtTailReport {
    pub trials: usize,
    pub points: Vec<TailPoint>,
    /// Log-log slope of the tail over `r`; `None` with fewer than two positive points.
    pub slope: Option<f64>,
    /// Smallest `b` with `estimate ≤ b / √r` at every `r`.
    pub b_hat: f64,
    pub pass: bool,
}

/// Tail of the first strict descent below the start, `V⁻_0 = inf{m > 0 : S_m < 0}`.
pub fn verify_sqrt_tail(
    dist: &EnvDistribution,
    r_list: &[u64],
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<SqrtTailReport> {
    check_trials(trials, 1)?;
    if r_list.is_empty() || r_list[0] == 0 || r_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("r_list", "must be positive and strictly increasing"));
    }
    let r_max = *r_list.last().unwrap();
    let firsts = par_map(workers, trials, |i| {
        let (_, _, mut pot) = replica(dist, seed, "sqrt-tail", i)?;
        let e = ladder_epochs(&mut pot, 1, r_max as i64)?;
        Ok(e.times.first().map(|t| *t as u64))
    })
    .into_iter()
    .collect::<Result<Vec<Option<u64>>>>()?;
    let points: Vec<TailPoint> = r_list
        .iter()
        .map(|&r| {
            let beyond = firsts.iter().filter(|t| t.map_or(true, |t| t > r)).count() as u64;
            TailPoint {
                r,
                estimate: Estimate::proportion(beyond, trials as u64),
            }
        })
        .collect();
    let positive: Vec<&TailPoint> = points.iter().filter(|p| p.estimate.value > 0.0).collect();
    let xs: Vec<f64> = positive.iter().map(|p| (p.r as f64).ln()).collect();
    let ys: Vec<f64> = positive.iter().map(|p| p.estimate.value.ln()).collect();
    let slope = linear_fit(&xs, &ys).map(|(s, _)| s);
    let b_hat = points
        .iter()
        .map(|p| p.estimate.value * (p.r as f64).sqrt())
        .fold(0.0, f64::max);
    Ok(SqrtTailReport {
        trials,
        pass: slope.is_some_and(|s| s <= -0.4) && b_hat.is_finite(),
        points,
        slope,
        b_hat,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCell {
    pub c_tilde: f64,
    pub band: u32,
    /// Mean of `#{j ∈ [m_n + c̃, M_n] : S_j - S_{m_n} ∈ [a(i-1), ai)}`.
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandReport {
    pub n: u64,
    pub a: f64,
    pub replicas: usize,
    /// Environments with a basic valley; the means are over these.
    pub valleys: usize,
    pub cells: Vec<BandCell>,
    /// `max_i estimate · √c̃ / i³` per `c̃`.
    pub c_hat: Vec<(f64, f64)>,
    /// Largest over smallest `c_hat`.
    pub spread: f64,
    /// Fewer than two valleys: standard errors undefined.
    pub flagged: bool,
    pub pass: bool,
}

pub fn verify_band_expectation(
    dist: &EnvDistribution,
    n: u64,
    c_list: &[f64],
    i_list: &[u32],
    replicas: usize,
    seed: u64,
    workers: usize,
) -> Result<BandReport> {
    check_trials(replicas, 1)?;
    if c_list.iter().any(|c| !(*c >= 0.0)) || i_list.iter().any(|i| *i == 0) {
        return Err(Error::param("cells", "c̃ must be ≥ 0 and bands start at 1"));
    }
    let a = dist.lambda() / 4.0;
    let sigma = dist.sigma();
    let per_env = par_map(workers, replicas, |r| -> Result<Option<Vec<f64>>> {
        let (_, _, mut pot) = replica(dist, seed, "band", r)?;
        let Some(v) = basic_valley_for(&mut pot, n, sigma)? else {
            return Ok(None);
        };
        let sm = pot.s(v.m_n);
        let mut counts = Vec::with_capacity(c_list.len() * i_list.len());
        for &c in c_list {
            let from = v.m_n + c.ceil() as i64;
            for &i in i_list {
                let (lo, hi) = (a * (i - 1) as f64, a * i as f64);
                let k = (from..=v.m_right)
                    .filter(|j| {
                        let x = pot.s(*j) - sm;
                        lo <= x && x < hi
                    })
                    .count();
                counts.push(k as f64);
            }
        }
        Ok(Some(counts))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = per_env.into_iter().flatten().collect();
    let mut cells = Vec::new();
    let mut c_hat = Vec::new();
    for (ci, &c) in c_list.iter().enumerate() {
        let mut best = 0.0f64;
        for (ii, &i) in i_list.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[ci * i_list.len() + ii]).collect();
            let estimate = Estimate::mean_of(&col);
            best = best.max(estimate.value * c.sqrt() / f64::from(i).powi(3));
            cells.push(BandCell {
                c_tilde: c,
                band: i,
                estimate,
            });
        }
        c_hat.push((c, best));
    }
    let hi = c_hat.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = c_hat.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    let flagged = rows.len() < 2;
    Ok(BandReport {
        n,
        a,
        replicas,
        valleys: rows.len(),
        cells,
        c_hat,
        spread,
        flagged,
        pass: !flagged && spread.is_finite() && spread <= 3.0,
    })
}

/// Outcome of the `c0` calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Calibration {
    pub c0: f64,
    /// `(c̃, mean of √c̃ · E_{m_n}[ℒ(Θ̃, T_{m_n})])` over the calibration valleys.
    pub grid: Vec<(f64, f64)>,
    pub valleys: usize,
}

fn occupation_by_reach(pot: &Potential, v: &BasicValley, grid: &[f64]) -> Result<Vec<f64>> {
    let profile = expected_local_time_profile(pot, v.m_n, v.m_prime, v.m_right)?;
    Ok(grid
        .iter()
        .map(|c| {
            let reach = c.ceil() as i64;
            profile
                .iter()
                .filter(|(j, _)| (j - v.m_n).abs() >= reach)
                .map(|(_, e)| e)
                .sum()
        })
        .collect())
}

/// `c0 = 2 · max_{c̃} mean(√c̃ · E_{m_n}[ℒ(Θ̃, T_{m_n})])` over the grid
/// `c̃ = 2^k`, `k = 0..=24`, on a calibration set of environments.
///
/// By Markov's inequality the off-core occupation then exceeds `2c0/√c̃`
/// with probability at most 1/4 on that set, for every grid value of `c̃`.
pub fn calibrate_c0(
    dist: &EnvDistribution,
    n: u64,
    replicas: usize,
    seed: u64,
    workers: usize,
) -> Result<C0Calibration> {
    let grid: Vec<f64> = (0..=24).map(|k| f64::from(1u32 << k)).collect();
    let sigma = dist.sigma();
    let per_env = par_map(workers, replicas, |r| -> Result<Option<Vec<f64>>> {
        let (_, _, mut pot) = replica(dist, seed, "good-env/calibrate", r)?;
        match basic_valley_for(&mut pot, n, sigma)? {
            Some(v) => Ok(Some(occupation_by_reach(&pot, &v, &grid)?)),
            None => Ok(None),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = per_env.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::BudgetExhausted("no calibration environment has a basic valley".into()));
    }
    let grid: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let col: Vec<f64> = rows.iter().map(|r| c.sqrt() * r[k]).collect();
            (*c, mean(&col))
        })
        .collect();
    let best = grid.iter().map(|g| g.1).fold(0.0, f64::max);
    Ok(C0Calibration {
        c0: 2.0 * best,
        grid,
        valleys: rows.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodEnvRateReport {
    pub n: u64,
    pub beta: f64,
    pub calibration: C0Calibration,
    pub params: GoodEnvParams,
    pub replicas: usize,
    /// Fraction of held-out environments satisfying all three properties.
    pub rate: Estimate,
    pub valley_rate: Estimate,
    pub window_rate: Estimate,
    /// Occupation property among environments with a valley.
    pub expectation_rate: Estimate,
    pub pass: bool,
}

pub fn verify_good_env_rate(
    dist: &EnvDistribution,
    n: u64,
    beta: f64,
    replicas: usize,
    seed: u64,
    workers: usize,
) -> Result<GoodEnvRateReport> {
    check_trials(replicas, 100)?;
    let calibration = calibrate_c0(dist, n, replicas, seed, workers)?;
    let params = GoodEnvParams::with_c0(n, beta, calibration.c0)?;
    let reports = par_map(workers, replicas, |r| {
        let (_, _, mut pot) = replica(dist, seed, "good-env/evaluate", r)?;
        is_good_environment(&mut pot, dist, &params)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let count = |f: &dyn Fn(&crate::analysis::GoodEnvReport) -> bool| {
        reports.iter().filter(|r| f(r)).count() as u64
    };
    let total = replicas as u64;
    let valleys = count(&|r| r.valley_exists);
    let rate = Estimate::proportion(count(&|r| r.is_good()), total);
    Ok(GoodEnvRateReport {
        n,
        beta,
        calibration,
        params,
        replicas,
        pass: rate.value >= 0.5 - 3.0 * rate.std_err,
        rate,
        valley_rate: Estimate::proportion(valleys, total),
        window_rate: Estimate::proportion(count(&|r| r.window_ok), total),
        expectation_rate: Estimate::proportion(count(&|r| r.expectation_ok), valleys.max(1)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub n: u64,
    /// Environments drawn to find the valleys.
    pub sampled: usize,
    pub valleys: usize,
    /// Flank comparisons made (two per valley and `c̃`).
    pub checks: usize,
    /// Comparisons with `sum > bound` in floating point.
    pub violations: usize,
    /// Violations on flanks whose every site falls in some band.
    pub covered_violations: usize,
    /// Comparisons where some flank site lies above every band.
    pub overflow_flanks: usize,
    /// Largest weight `Σ e^{-(S_j - S_m)}` carried by uncovered sites.
    pub max_uncovered_weight: f64,
    pub pass: bool,
}

/// The band bound on the first `valleys` environments that have a basic valley.
pub fn verify_slice_bound(
    dist: &EnvDistribution,
    n: u64,
    valleys: usize,
    c_list: &[f64],
    seed: u64,
    workers: usize,
) -> Result<SliceReport> {
    check_trials(valleys, 1)?;
    let sigma = dist.sigma();
    let lambda = dist.lambda();
    let a = lambda / 4.0;
    let gamma = gamma_n(n)?;
    let top = a * (((gamma + lambda) / a).floor() + 1.0);
    let mut found = Vec::new();
    let mut next = 0usize;
    let batch = 64;
    while found.len() < valleys {
        if next > valleys * 20 {
            return Err(Error::BudgetExhausted("too few basic valleys".into()));
        }
        let results = par_map(workers, batch, |k| -> Result<Option<[f64; 5]>> {
            let (_, _, mut pot) = replica(dist, seed, "slice", next + k)?;
            let Some(v) = basic_valley_for(&mut pot, n, sigma)? else {
                return Ok(None);
            };
            let sm = pot.s(v.m_n);
            let (mut bad, mut covered_bad, mut over, mut weight) = (0, 0, 0, 0.0f64);
            for &c in c_list {
                let b = slice_upper_bound(&pot, &v, c, a, lambda)?;
                let reach = c.ceil() as i64;
                for (f, range) in [
                    (b.right, (v.m_n + reach, v.m_right)),
                    (b.left, (v.m_prime, v.m_n - reach)),
                ] {
                    bad += usize::from(!f.holds());
                    covered_bad += usize::from(!f.holds() && f.overflow == 0);
                    if f.overflow > 0 {
                        over += 1;
                        let w: f64 = (range.0..=range.1)
                            .map(|j| pot.s(j) - sm)
                            .filter(|x| *x >= top)
                            .map(|x| (-x).exp())
                            .sum();
                        weight = weight.max(w);
                    }
                }
            }
            Ok(Some([(2 * c_list.len()) as f64, bad as f64, covered_bad as f64, over as f64, weight]))
        });
        for r in results {
            if found.len() < valleys {
                if let Some(x) = r? {
                    found.push(x);
                }
            }
            next += 1;
            if found.len() == valleys {
                break;
            }
        }
    }
    let total = |k: usize| found.iter().map(|x| x[k] as usize).sum::<usize>();
    let violations = total(1);
    Ok(SliceReport {
        n,
        sampled: next,
        valleys: found.len(),
        checks: total(0),
        violations,
        covered_violations: total(2),
        overflow_flanks: total(3),
        max_uncovered_weight: found.iter().map(|x| x[4]).fold(0.0, f64::max),
        pass: violations == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub n: u64,
    /// Pairs with a basic valley.
    pub pairs: usize,
    /// Runs that leave `[M'_n, M_n]` before time `n`.
    pub left_valley: Estimate,
    /// Runs with `T_{m_n} > n / (log n)^4`.
    pub slow_to_bottom: Estimate,
    pub bottom_threshold: f64,
}

/// Escape and return-time frequencies of walks inside their basic valley.
pub fn probe_escape(
    dist: &EnvDistribution,
    n: u64,
    pairs: usize,
    seed: u64,
    workers: usize,
) -> Result<EscapeReport> {
    check_trials(pairs, 1)?;
    let sigma = dist.sigma();
    let threshold = n as f64 / (n as f64).ln().powi(4);
    let per = par_map(workers, pairs, |r| -> Result<Option<(bool, bool)>> {
        let (_, walk_seed, mut pot) = replica(dist, seed, "escape", r)?;
        let Some(v) = basic_valley_for(&mut pot, n, sigma)? else {
            return Ok(None);
        };
        let mut w = Walker::new(&mut pot, SeededSteps::new(walk_seed), 0)?;
        let mut hit = None;
        let mut left = false;
        for _ in 0..n {
            let x = w.step()?;
            if hit.is_none() && x == v.m_n {
                hit = Some(w.state().steps);
            }
            if x < v.m_prime || x > v.m_right {
                left = true;
            }
            if left && hit.is_some() {
                break;
            }
        }
        Ok(Some((left, hit.map_or(true, |t| t as f64 > threshold))))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let rows: Vec<(bool, bool)> = per.into_iter().flatten().collect();
    let k = rows.len() as u64;
    Ok(EscapeReport {
        n,
        pairs: rows.len(),
        left_valley: Estimate::proportion(rows.iter().filter(|r| r.0).count() as u64, k),
        slow_to_bottom: Estimate::proportion(rows.iter().filter(|r| r.1).count() as u64, k),
        bottom_threshold: threshold,
    })
}
