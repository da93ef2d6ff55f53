//! Quenched simulation of the walk and local-time accounting.
//!
//! From site `i` the walk steps to `i + 1` with probability `α_i` and to
//! `i - 1` otherwise. Local times count the positions at steps `1..=n`;
//! the starting position is not counted.

mod stats;

pub use stats::{
    concentration_radius, concentration_window, exhaustive_radius, stats, ConcentrationStats,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::seeds::walk_rng;

/// Source of step decisions.
pub trait StepSource {
    /// Whether the walk moves up from a site with up-probability `alpha`.
    fn up(&mut self, alpha: f64) -> bool;
}

/// The production source: one uniform draw per step from the walk stream.
#[derive(Debug, Clone)]
pub struct SeededSteps(ChaCha8Rng);

impl SeededSteps {
    pub fn new(walk_seed: u64) -> Self {
        SeededSteps(walk_rng(walk_seed))
    }
}

impl StepSource for SeededSteps {
    #[inline]
    fn up(&mut self, alpha: f64) -> bool {
        self.0.random::<f64>() < alpha
    }
}

/// Ignores the environment and replays `pattern` cyclically (tests).
#[derive(Debug, Clone)]
pub struct ForcedSteps {
    pattern: Vec<bool>,
    at: usize,
}

impl ForcedSteps {
    pub fn new(pattern: Vec<bool>) -> Self {
        assert!(!pattern.is_empty(), "empty step pattern");
        ForcedSteps { pattern, at: 0 }
    }

    pub fn always_up() -> Self {
        Self::new(vec![true])
    }
}

impl StepSource for ForcedSteps {
    fn up(&mut self, _alpha: f64) -> bool {
        let v = self.pattern[self.at];
        self.at = (self.at + 1) % self.pattern.len();
        v
    }
}

/// Visit counts over a dense range of sites.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalTimeField {
    lo: i64,
    counts: Vec<u64>,
    total: u64,
}

impl LocalTimeField {
    pub fn new() -> Self {
        LocalTimeField {
            lo: 0,
            counts: Vec::new(),
            total: 0,
        }
    }

    /// Field of an explicit path `x_1, x_2, ...` (time 0 excluded).
    pub fn from_path(path: &[i64]) -> Self {
        let mut f = Self::new();
        for &x in path {
            f.visit(x);
        }
        f
    }

    #[inline]
    pub fn visit(&mut self, site: i64) {
        if self.counts.is_empty() {
            self.lo = site;
            self.counts.push(0);
        } else if site < self.lo {
            let grow = (self.lo - site) as usize;
            let extra = grow.max(self.counts.len());
            self.counts.splice(0..0, std::iter::repeat(0).take(extra));
            self.lo -= extra as i64;
        } else if site >= self.lo + self.counts.len() as i64 {
            let need = (site - self.lo) as usize + 1;
            let target = need.max(2 * self.counts.len());
            self.counts.resize(target, 0);
        }
        self.counts[(site - self.lo) as usize] += 1;
        self.total += 1;
    }

    /// `ℒ(site, n)`.
    pub fn get(&self, site: i64) -> u64 {
        if site < self.lo {
            return 0;
        }
        self.counts.get((site - self.lo) as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Smallest and largest visited site.
    pub fn visited_range(&self) -> Option<(i64, i64)> {
        let first = self.counts.iter().position(|c| *c > 0)?;
        let last = self.counts.iter().rposition(|c| *c > 0)?;
        Some((self.lo + first as i64, self.lo + last as i64))
    }

    /// `(site, count)` over the visited range, zero counts included.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        let (a, b) = self.visited_range().unwrap_or((0, -1));
        (a..=b).map(move |k| (k, self.get(k)))
    }

    /// Counts over the visited range, leftmost first, with its first site.
    pub fn dense(&self) -> (i64, &[u64]) {
        match self.visited_range() {
            Some((a, b)) => (
                a,
                &self.counts[(a - self.lo) as usize..=(b - self.lo) as usize],
            ),
            None => (0, &[]),
        }
    }

    /// FNV-1a over the `(site, count)` pairs with nonzero count.
    pub fn digest(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (k, c) in self.iter().filter(|(_, c)| *c > 0) {
            for b in k.to_le_bytes().into_iter().chain(c.to_le_bytes()) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

impl PartialEq for LocalTimeField {
    fn eq(&self, other: &Self) -> bool {
        self.total == other.total && self.iter().eq(other.iter())
    }
}

impl Eq for LocalTimeField {}

impl Default for LocalTimeField {
    fn default() -> Self {
        Self::new()
    }
}

/// Position and clock of a walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkState {
    pub position: i64,
    pub steps: u64,
}

/// A walk in the environment behind `pot`, extending the window as it goes.
pub struct Walker<'p, S> {
    pot: &'p mut Potential,
    source: S,
    state: WalkState,
}

impl<'p, S: StepSource> Walker<'p, S> {
    pub fn new(pot: &'p mut Potential, source: S, start: i64) -> Result<Self> {
        pot.ensure(start, start)?;
        Ok(Walker {
            pot,
            source,
            state: WalkState {
                position: start,
                steps: 0,
            },
        })
    }

    pub fn state(&self) -> WalkState {
        self.state
    }

    pub fn potential(&self) -> &Potential {
        self.pot
    }

    /// One step; returns the new position.
    #[inline]
    pub fn step(&mut self) -> Result<i64> {
        let x = self.state.position;
        let up = self.source.up(self.pot.alpha(x));
        let y = if up { x + 1 } else { x - 1 };
        if !self.pot.contains(y) {
            self.pot.ensure(y, y)?;
        }
        self.state.position = y;
        self.state.steps += 1;
        Ok(y)
    }
}

/// Local times after `n` steps and the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub field: LocalTimeField,
    pub state: WalkState,
}

fn check_steps(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "at least one step is required"));
    }
    Ok(())
}

/// `n` steps from `start` under `walk_seed`.
pub fn run(pot: &mut Potential, walk_seed: u64, n: u64, start: i64) -> Result<RunOutput> {
    run_with(pot, SeededSteps::new(walk_seed), n, start)
}

pub fn run_with<S: StepSource>(
    pot: &mut Potential,
    source: S,
    n: u64,
    start: i64,
) -> Result<RunOutput> {
    let mut out = None;
    run_checkpoints_with(pot, source, &[n], start, |_, field, state| {
        out = Some(RunOutput {
            field: field.clone(),
            state,
        });
    })?;
    Ok(out.expect("one checkpoint"))
}

/// Runs to the last of the strictly increasing `checkpoints`, calling
/// `visit(n, field, state)` when the clock reaches each of them.
pub fn run_checkpoints(
    pot: &mut Potential,
    walk_seed: u64,
    checkpoints: &[u64],
    start: i64,
    visit: impl FnMut(u64, &LocalTimeField, WalkState),
) -> Result<()> {
    run_checkpoints_with(pot, SeededSteps::new(walk_seed), checkpoints, start, visit)
}

pub fn run_checkpoints_with<S: StepSource>(
    pot: &mut Potential,
    source: S,
    checkpoints: &[u64],
    start: i64,
    mut visit: impl FnMut(u64, &LocalTimeField, WalkState),
) -> Result<()> {
    let Some(&first) = checkpoints.first() else {
        return Err(Error::param("checkpoints", "empty schedule"));
    };
    check_steps(first)?;
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("checkpoints", "must be strictly increasing"));
    }
    let mut walker = Walker::new(pot, source, start)?;
    let mut field = LocalTimeField::new();
    for &n in checkpoints {
        while walker.state.steps < n {
            let y = walker.step()?;
            field.visit(y);
        }
        visit(n, &field, walker.state);
    }
    Ok(())
}

/// `T_x`: first `k ≥ 1` with `X_k = x`, or `None` after `cap` steps.
pub fn hitting_time(
    pot: &mut Potential,
    walk_seed: u64,
    x: i64,
    start: i64,
    cap: u64,
) -> Result<Option<u64>> {
    hitting_time_with(pot, SeededSteps::new(walk_seed), x, start, cap)
}

pub fn hitting_time_with<S: StepSource>(
    pot: &mut Potential,
    source: S,
    x: i64,
    start: i64,
    cap: u64,
) -> Result<Option<u64>> {
    if cap == 0 {
        return Err(Error::param("cap", "must be at least 1"));
    }
    let mut walker = Walker::new(pot, source, start)?;
    while walker.state.steps < cap {
        if walker.step()? == x {
            return Ok(Some(walker.state.steps));
        }
    }
    Ok(None)
}

/// Mean visits to a target set per excursion from `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionEstimate {
    pub mean: f64,
    /// Standard error of the mean; NaN with fewer than two excursions.
    pub std_err: f64,
    /// Completed excursions the mean is taken over.
    pub excursions: u64,
    /// Steps actually simulated.
    pub steps: u64,
    /// The step budget ran out before the requested count.
    pub exhausted: bool,
}

/// Estimates `E_m[ℒ(targets, T_m)]` from successive excursions of one walk
/// started at `m`.
///
/// Only the segment spanned by `m` and the targets is simulated. A step out
/// of it is undone at once: the walk comes back to the edge site without
/// touching a target in between. That return is certain under the
/// recurrence hypothesis; without it (transient environments) the estimate
/// is exact only when the edge beyond is on a side of `m` with no targets
/// and `m` itself is not a target.
pub fn excursion_local_time(
    pot: &mut Potential,
    walk_seed: u64,
    m: i64,
    targets: &[i64],
    excursions: u64,
    step_budget: u64,
) -> Result<ExcursionEstimate> {
    excursion_local_time_with(pot, SeededSteps::new(walk_seed), m, targets, excursions, step_budget)
}

pub fn excursion_local_time_with<S: StepSource>(
    pot: &mut Potential,
    mut source: S,
    m: i64,
    targets: &[i64],
    excursions: u64,
    step_budget: u64,
) -> Result<ExcursionEstimate> {
    if excursions == 0 {
        return Err(Error::param("excursions", "must be at least 1"));
    }
    if targets.is_empty() {
        return Err(Error::param("targets", "empty target set"));
    }
    let lo = targets.iter().copied().min().unwrap().min(m);
    let hi = targets.iter().copied().max().unwrap().max(m);
    pot.ensure(lo, hi)?;
    let mut is_target = vec![false; (hi - lo + 1) as usize];
    for &t in targets {
        is_target[(t - lo) as usize] = true;
    }

    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    let mut done = 0u64;
    let mut steps = 0u64;
    'outer: while done < excursions {
        let mut x = m;
        let mut visits = 0u64;
        loop {
            if steps == step_budget {
                break 'outer;
            }
            steps += 1;
            let up = source.up(pot.alpha(x));
            let mut y = if up { x + 1 } else { x - 1 };
            if y > hi || y < lo {
                // beyond the outermost target: comes back to it
                y = x;
            }
            if is_target[(y - lo) as usize] {
                visits += 1;
            }
            if y == m {
                break;
            }
            x = y;
        }
        let v = visits as f64;
        sum += v;
        sum_sq += v * v;
        done += 1;
    }
    let mean = if done > 0 { sum / done as f64 } else { f64::NAN };
    let std_err = if done > 1 {
        let var = (sum_sq - sum * sum / done as f64) / (done - 1) as f64;
        (var.max(0.0) / done as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(ExcursionEstimate {
        mean,
        std_err,
        excursions: done,
        steps,
        exhausted: done < excursions,
    })
}
