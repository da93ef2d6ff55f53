//! Valleys of the potential, the refinement operation and the basic valley.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

/// `Γ_n = log n + 12 log log n`. Requires `n ≥ 16`.
pub fn gamma_n(n: u64) -> Result<f64> {
    Ok((n as f64).ln() + margin_n(n)?)
}

/// The `12 log log n` part of `Γ_n`.
pub fn margin_n(n: u64) -> Result<f64> {
    if n < 16 {
        return Err(Error::param("n", format!("{n} < 16")));
    }
    Ok(12.0 * (n as f64).ln().ln())
}

/// A triple `{M', m, M''}` with `S_{M'} = max_{[M', m]} S`,
/// `S_{M''} = max_{[m, M'']} S` and `S_m = min_{[M', M'']} S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Valley {
    pub left: i64,
    pub bottom: i64,
    pub right: i64,
    /// `min(S_{M'} - S_m, S_{M''} - S_m)`
    pub depth: f64,
}

impl Valley {
    /// Builds the triple and its depth. Does not check the valley property;
    /// see [`Valley::is_valley`].
    pub fn new(pot: &Potential, left: i64, bottom: i64, right: i64) -> Result<Self> {
        if !(left <= bottom && bottom <= right) {
            return Err(Error::param(
                "valley",
                format!("need M' <= m <= M'', got ({left}, {bottom}, {right})"),
            ));
        }
        let sm = pot.try_s(bottom)?;
        let depth = (pot.try_s(left)? - sm).min(pot.try_s(right)? - sm);
        Ok(Valley {
            left,
            bottom,
            right,
            depth,
        })
    }

    /// Re-scans `S` to verify the three extremum conditions.
    pub fn is_valley(&self, pot: &Potential) -> bool {
        if !(self.left <= self.bottom && self.bottom <= self.right)
            || !pot.contains(self.left)
            || !pot.contains(self.right)
        {
            return false;
        }
        let (sl, sm, sr) = (pot.s(self.left), pot.s(self.bottom), pot.s(self.right));
        (self.left..=self.bottom).all(|t| pot.s(t) <= sl)
            && (self.bottom..=self.right).all(|t| pot.s(t) <= sr)
            && (self.left..=self.right).all(|t| pot.s(t) >= sm)
    }

    pub fn contains(&self, site: i64) -> bool {
        self.left <= site && site <= self.right
    }
}

/// A refinement `(peak, bottom)` and the drop `S_peak - S_bottom` it realizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub peak: i64,
    pub bottom: i64,
    pub drop: f64,
}

impl Refinement {
    fn key(&self) -> (u64, u64, i64, i64) {
        (
            self.bottom.unsigned_abs(),
            self.peak.unsigned_abs(),
            self.bottom,
            self.peak,
        )
    }
}

/// Largest `S_p - S_q` over pairs with `p` scanned no later than `q`, ties
/// broken by `(|q|, |p|, q, p)`. `None` when no strict descent exists.
fn best_drop(pot: &Potential, order: &[i64]) -> Option<Refinement> {
    // fl(x - c) is monotone in x, so the best partner of q is always at the running max.
    let mut run_max = f64::NEG_INFINITY;
    let mut best = 0.0f64;
    let mut gaps = Vec::with_capacity(order.len());
    for &q in order {
        run_max = run_max.max(pot.s(q));
        let gap = run_max - pot.s(q);
        best = best.max(gap);
        gaps.push(gap);
    }
    if !(best > 0.0) {
        return None;
    }
    let min_abs = order
        .iter()
        .zip(&gaps)
        .filter(|(_, g)| **g == best)
        .map(|(q, _)| q.unsigned_abs())
        .min()?;
    let mut chosen: Option<Refinement> = None;
    for (pos, &q) in order.iter().enumerate() {
        if gaps[pos] != best || q.unsigned_abs() != min_abs {
            continue;
        }
        let sq = pot.s(q);
        let peak = order[..pos]
            .iter()
            .copied()
            .filter(|&p| pot.s(p) - sq == best)
            .min_by_key(|p| (p.unsigned_abs(), *p))
            .expect("a maximizing partner exists");
        let cand = Refinement {
            peak,
            bottom: q,
            drop: best,
        };
        if chosen.map_or(true, |c| cand.key() < c.key()) {
            chosen = Some(cand);
        }
    }
    chosen
}

/// Right refinement: `m ≤ M_1 < m_1 ≤ M''` maximizing `S_{M_1} - S_{m_1}`.
///
/// Ties prefer the smallest `|m_1|`, then the smallest `|M_1|`, then the
/// smaller site indices. Without any descent returns `(m, m)` with drop 0.
pub fn refine_right(pot: &Potential, valley: &Valley) -> Result<Refinement> {
    pot.try_s(valley.bottom)?;
    pot.try_s(valley.right)?;
    let order: Vec<i64> = (valley.bottom..=valley.right).collect();
    Ok(best_drop(pot, &order).unwrap_or(Refinement {
        peak: valley.bottom,
        bottom: valley.bottom,
        drop: 0.0,
    }))
}

/// Left refinement: `M' ≤ m_1 < M_1 ≤ m` maximizing `S_{M_1} - S_{m_1}`,
/// i.e. the deepest descent met when walking leftward from the bottom.
pub fn refine_left(pot: &Potential, valley: &Valley) -> Result<Refinement> {
    pot.try_s(valley.left)?;
    pot.try_s(valley.bottom)?;
    let order: Vec<i64> = (valley.left..=valley.bottom).rev().collect();
    Ok(best_drop(pot, &order).unwrap_or(Refinement {
        peak: valley.bottom,
        bottom: valley.bottom,
        drop: 0.0,
    }))
}

/// The basic valley `{M'_n, m_n, M_n}` built for depth `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicValley {
    pub m_prime: i64,
    pub m_n: i64,
    pub m_right: i64,
    /// Depth threshold the valley was built for (`Γ_n` in production).
    pub gamma: f64,
    /// Side-condition margin (`12 log log n` in production).
    pub margin: f64,
    pub depth: f64,
}

impl BasicValley {
    pub fn as_valley(&self) -> Valley {
        Valley {
            left: self.m_prime,
            bottom: self.m_n,
            right: self.m_right,
            depth: self.depth,
        }
    }

    pub fn width(&self) -> i64 {
        self.m_right - self.m_prime
    }
}

/// Whether `v` contains 0, is at least `gamma` deep and satisfies the side
/// condition: a bottom left of 0 needs `S_{M''} - max_{[m, 0]} S ≥ margin`,
/// a bottom right of 0 needs `S_{M'} - max_{[0, m]} S ≥ margin`.
pub fn is_deep_valley_around_zero(pot: &Potential, v: &Valley, gamma: f64, margin: f64) -> bool {
    if !v.contains(0) || !v.is_valley(pot) || !(v.depth >= gamma) {
        return false;
    }
    let hump = |a: i64, b: i64| (a..=b).map(|t| pot.s(t)).fold(f64::NEG_INFINITY, f64::max);
    if v.bottom < 0 {
        pot.s(v.right) - hump(v.bottom, 0) >= margin
    } else if v.bottom > 0 {
        pot.s(v.left) - hump(0, v.bottom) >= margin
    } else {
        true
    }
}

enum Scan {
    Found(i64),
    /// The potential dropped below the candidate bottom first.
    Broken,
    /// Ran off the searchable window.
    Undecided,
}

/// First site in `steps` whose value reaches `threshold`, provided nothing
/// on the way (the hit included) is below `floor`.
fn first_reaching(
    pot: &Potential,
    steps: impl Iterator<Item = i64>,
    threshold: f64,
    floor: f64,
) -> Scan {
    for l in steps {
        let v = pot.s(l);
        if v < floor {
            return Scan::Broken;
        }
        if v >= threshold {
            return Scan::Found(l);
        }
    }
    Scan::Undecided
}

fn walls_for_bottom(
    pot: &Potential,
    m: i64,
    gamma: f64,
    margin: f64,
    lo: i64,
    hi: i64,
) -> Option<(i64, i64)> {
    let sm = pot.s(m);
    let deep = sm + gamma;
    let hump = |a: i64, b: i64| (a..=b).map(|t| pot.s(t)).fold(f64::NEG_INFINITY, f64::max);
    let (left, right) = if m > 0 {
        let right = first_reaching(pot, m + 1..=hi, deep, sm);
        let threshold = deep.max(hump(0, m) + margin);
        // sites in [0, m] are ≥ S_m because m is a running minimum from 0
        let left = first_reaching(pot, (lo..=0).rev(), threshold, sm);
        (left, right)
    } else if m < 0 {
        let left = first_reaching(pot, (lo..m).rev(), deep, sm);
        let threshold = deep.max(hump(m, 0) + margin);
        let right = first_reaching(pot, 0..=hi, threshold, sm);
        (left, right)
    } else {
        (
            first_reaching(pot, (lo..0).rev(), deep, sm),
            first_reaching(pot, 1..=hi, deep, sm),
        )
    };
    match (left, right) {
        (Scan::Found(l), Scan::Found(r)) => Some((l, r)),
        _ => None,
    }
}

/// Smallest valley containing 0 of depth `≥ gamma` with the side condition,
/// searched within `[-cap, cap]` (clamped to the window of fixed potentials).
///
/// The bottom of any such valley is a weak running minimum of `S` started
/// from 0 on its side, so only those sites are tried. For each, the tightest
/// walls are the ones of the `M'_n`/`M_n` formulas (first point `gamma` above
/// the bottom on the far side, first point also `margin` above the hump
/// between 0 and the bottom on the near side), and the candidate is valid
/// when `S` stays above the bottom in between. Valid candidates are nested,
/// so the narrowest one is the smallest valley; equal widths fall back to
/// the smallest `|m|`.
///
/// Returns `Ok(None)` when no valley fits the window.
pub fn basic_valley(
    pot: &mut Potential,
    gamma: f64,
    margin: f64,
    cap: i64,
) -> Result<Option<BasicValley>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma", format!("{gamma} must be positive")));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::param("margin", format!("{margin} must be nonnegative")));
    }
    if cap <= 0 {
        return Err(Error::param("cap", format!("{cap} must be positive")));
    }
    if pot.is_extendable() {
        // grow in stages: an answer found in a sub-window is final because
        // every other valid candidate would contain it
        let mut w = 256.min(cap);
        loop {
            pot.ensure(-w, w)?;
            if let Some(v) = basic_valley_in(pot, gamma, margin, -w, w) {
                return Ok(Some(v));
            }
            if w == cap {
                return Ok(None);
            }
            w = (w * 2).min(cap);
        }
    }
    let lo = pot.lo().max(-cap);
    let hi = pot.hi().min(cap);
    if !(lo <= 0 && 0 <= hi) {
        return Ok(None);
    }
    Ok(basic_valley_in(pot, gamma, margin, lo, hi))
}

fn basic_valley_in(pot: &Potential, gamma: f64, margin: f64, lo: i64, hi: i64) -> Option<BasicValley> {
    let mut candidates = vec![0i64];
    let mut run_min = pot.s(0);
    for m in 1..=hi {
        if pot.s(m) <= run_min {
            run_min = pot.s(m);
            candidates.push(m);
        }
    }
    run_min = pot.s(0);
    for m in (lo..0).rev() {
        if pot.s(m) <= run_min {
            run_min = pot.s(m);
            candidates.push(m);
        }
    }
    let mut best: Option<BasicValley> = None;
    for m in candidates {
        let Some((left, right)) = walls_for_bottom(pot, m, gamma, margin, lo, hi) else {
            continue;
        };
        let sm = pot.s(m);
        let cand = BasicValley {
            m_prime: left,
            m_n: m,
            m_right: right,
            gamma,
            margin,
            depth: (pot.s(left) - sm).min(pot.s(right) - sm),
        };
        let key = |v: &BasicValley| (v.width(), v.m_n.unsigned_abs(), v.m_n);
        if best.as_ref().map_or(true, |b| key(&cand) < key(b)) {
            best = Some(cand);
        }
    }
    best
}
