//! Favorite sites and concentration radii of a local-time field.

use serde::{Deserialize, Serialize};

use super::LocalTimeField;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcentrationStats {
    /// `ℒ*(n)`
    pub l_star: u64,
    /// Sites achieving `ℒ*(n)`, increasing.
    pub favorites: Vec<i64>,
    /// `max F_n - min F_n`
    pub fav_spread: u64,
}

pub fn stats(field: &LocalTimeField) -> Result<ConcentrationStats> {
    check_nonempty(field)?;
    let l_star = field.iter().map(|(_, c)| c).max().unwrap_or(0);
    let favorites: Vec<i64> = field
        .iter()
        .filter(|(_, c)| *c == l_star)
        .map(|(k, _)| k)
        .collect();
    let fav_spread = (favorites[favorites.len() - 1] - favorites[0]) as u64;
    Ok(ConcentrationStats {
        l_star,
        favorites,
        fav_spread,
    })
}

fn check_nonempty(field: &LocalTimeField) -> Result<()> {
    if field.total() == 0 {
        return Err(Error::param("field", "no steps recorded"));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::param("beta", format!("{beta} not in [0, 1)")));
    }
    Ok(())
}

/// Prefix sums `p[i] = Σ_{j<i} counts[j]` over the dense visited range.
fn prefix(counts: &[u64]) -> Vec<u64> {
    let mut p = Vec::with_capacity(counts.len() + 1);
    p.push(0);
    let mut acc = 0;
    for c in counts {
        acc += c;
        p.push(acc);
    }
    p
}

/// Largest mass of a window of radius `k` and its leftmost center.
fn best_window(p: &[u64], first: i64, k: u64) -> (u64, i64) {
    let len = p.len() - 1;
    let width = 2 * k as usize + 1;
    if width >= len {
        // one window covers everything; leftmost center doing so
        return (p[len], first + len as i64 - 1 - k as i64);
    }
    let mut best = (0, first);
    for start in 0..=len - width {
        let mass = p[start + width] - p[start];
        if mass > best.0 {
            best = (mass, first + start as i64 + k as i64);
        }
    }
    // windows sticking out on the left carry less than the first full window
    // but may start further left with equal mass
    let mut center = best.1;
    while center > first - k as i64 {
        let c = center - 1;
        let lo = (c - k as i64).max(first);
        let hi = c + k as i64;
        let mass = p[(hi - first + 1) as usize] - p[(lo - first) as usize];
        if mass < best.0 {
            break;
        }
        center = c;
    }
    (best.0, center)
}

fn meets(mass: u64, beta: f64, total: u64) -> bool {
    mass as f64 >= beta * total as f64
}

/// `Y_{n,β}` with its leftmost optimal center: the smallest `k ≥ 1` such
/// that some `[x - k, x + k]` carries at least `β n` of the local time.
pub fn concentration_window(field: &LocalTimeField, beta: f64) -> Result<(u64, i64)> {
    check_beta(beta)?;
    check_nonempty(field)?;
    let (first, counts) = field.dense();
    let p = prefix(counts);
    let total = field.total();
    // max window mass is nondecreasing in k, so the first admissible k is found by bisection
    let (mut lo, mut hi) = (1u64, (counts.len() as u64 / 2).max(1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if meets(best_window(&p, first, mid).0, beta, total) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let (_, center) = best_window(&p, first, lo);
    Ok((lo, center))
}

pub fn concentration_radius(field: &LocalTimeField, beta: f64) -> Result<u64> {
    Ok(concentration_window(field, beta)?.0)
}

/// The same radius by trying every center and radius; for tests.
pub fn exhaustive_radius(field: &LocalTimeField, beta: f64) -> Result<u64> {
    check_beta(beta)?;
    check_nonempty(field)?;
    let (a, b) = field.visited_range().expect("nonempty");
    let total = field.total();
    for k in 1.. {
        for x in a - k..=b + k {
            let mass: u64 = (x - k..=x + k).map(|s| field.get(s)).sum();
            if meets(mass, beta, total) {
                return Ok(k as u64);
            }
        }
    }
    unreachable!()
}
