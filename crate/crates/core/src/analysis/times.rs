//! Stopping times of the potential seen as a random walk in `k`.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

const CHUNK: i64 = 4096;

/// Calls `f(m, S_{start+m} - S_start)` for `m = 1, 2, ..., cap` until it
/// breaks. Extends env-backed potentials in chunks; fixed ones stop at the
/// window edge. Returns the break value, or `None` when the scan ran out.
fn scan_right<T>(
    pot: &mut Potential,
    start: i64,
    cap: i64,
    mut f: impl FnMut(i64, f64) -> ControlFlow<T>,
) -> Result<Option<T>> {
    if cap <= 0 {
        return Err(Error::param("cap", format!("{cap} must be positive")));
    }
    if pot.is_extendable() {
        pot.ensure(start, start)?;
    }
    let base = pot.try_s(start)?;
    let mut m = 1;
    while m <= cap {
        let end = (m + CHUNK - 1).min(cap);
        let last = if pot.is_extendable() {
            pot.ensure(start + m, start + end)?;
            end
        } else {
            end.min(pot.hi() - start)
        };
        while m <= last {
            if let ControlFlow::Break(v) = f(m, pot.s(start + m) - base) {
                return Ok(Some(v));
            }
            m += 1;
        }
        if last < end {
            break;
        }
    }
    Ok(None)
}

fn check_level(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::param("a", format!("{a} must be positive")))
    }
}

/// `V⁺_a`: first `m ≥ 1` with `S_{start+m} - S_start ≥ a`, scanning at most `cap` sites.
pub fn stopping_time_up(pot: &mut Potential, a: f64, start: i64, cap: i64) -> Result<Option<i64>> {
    check_level(a)?;
    scan_right(pot, start, cap, |m, v| {
        if v >= a {
            ControlFlow::Break(m)
        } else {
            ControlFlow::Continue(())
        }
    })
}

/// `V⁻_a`: first `m ≥ 1` with `S_{start+m} - S_start ≤ -a`.
pub fn stopping_time_down(pot: &mut Potential, a: f64, start: i64, cap: i64) -> Result<Option<i64>> {
    check_level(a)?;
    scan_right(pot, start, cap, |m, v| {
        if v <= -a {
            ControlFlow::Break(m)
        } else {
            ControlFlow::Continue(())
        }
    })
}

/// A list of times and whether the scan cap cut it short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epochs {
    pub times: Vec<i64>,
    pub exhausted: bool,
}

/// Strict descending ladder epochs from 0: `u_0 = 0`,
/// `u_i = inf{m > u_{i-1} : S_m < S_{u_{i-1}}}`.
pub fn ladder_epochs(pot: &mut Potential, count: usize, cap: i64) -> Result<Epochs> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let mut times = Vec::with_capacity(count);
    let mut level = 0.0;
    scan_right(pot, 0, cap, |m, v| {
        if v < level {
            level = v;
            times.push(m);
            if times.len() == count {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    let exhausted = times.len() < count;
    Ok(Epochs { times, exhausted })
}

/// Successive times `m ≥ 1` with `S_m - S_0 ∈ [(i-1)a, ia)`.
pub fn band_entry_times(
    pot: &mut Potential,
    band: u32,
    a: f64,
    count: usize,
    cap: i64,
) -> Result<Epochs> {
    check_level(a)?;
    if band == 0 {
        return Err(Error::param("band", "index starts at 1"));
    }
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let (lo, hi) = (a * (band - 1) as f64, a * band as f64);
    let mut times = Vec::with_capacity(count);
    scan_right(pot, 0, cap, |m, v| {
        if lo <= v && v < hi {
            times.push(m);
            if times.len() == count {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    let exhausted = times.len() < count;
    Ok(Epochs { times, exhausted })
}
