//! Direct linear solves used to cross-check the closed forms. Nothing here
//! touches the potential `S`; only the site probabilities enter.

use super::{ChainSegment, Target};
use crate::error::{Error, Result};
use crate::potential::Potential;

pub const MAX_HIT_INTERVAL: u64 = 10_000;
pub const MAX_LOCAL_TIME_DISTANCE: u64 = 1_000;

/// Solves `-lower[i] x[i-1] + (lower[i] + upper[i] + excess[i]) x[i] - upper[i] x[i+1] = rhs[i]`
/// for nonnegative coefficients and right-hand side. `lower[0]` and
/// `upper[n-1]` couple to fixed boundary values the caller has already moved
/// into `rhs`.
///
/// Thomas elimination written without subtractions: each pivot is assembled
/// from the part of its row that leaks towards the eliminated side, so every
/// intermediate is a sum of positive terms and the result keeps full relative
/// accuracy even when the solution spans hundreds of orders of magnitude.
pub fn solve_m_tridiagonal(lower: &[f64], upper: &[f64], excess: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    assert!(lower.len() == n && upper.len() == n && excess.len() == n);
    let mut pivot = vec![0.0; n];
    let mut r = vec![0.0; n];
    // leak[i] = pivot[i] - upper[i]
    let mut leak = 0.0;
    for i in 0..n {
        let carried = if i == 0 { lower[0] } else { lower[i] * leak / pivot[i - 1] };
        leak = excess[i] + carried;
        pivot[i] = upper[i] + leak;
        r[i] = if i == 0 { rhs[0] } else { rhs[i] + lower[i] * r[i - 1] / pivot[i - 1] };
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let next = if i + 1 < n { upper[i] * x[i + 1] } else { 0.0 };
        x[i] = (r[i] + next) / pivot[i];
    }
    x
}

/// Solves `h_a, h_b` fixed, `h_i = α_i h_{i+1} + β_i h_{i-1}` on the interior.
pub fn oracle_hit_prob(seg: &ChainSegment<'_>, x: i64, target: Target) -> Result<f64> {
    let (a, b) = seg.bounds();
    let len = (b - a) as u64;
    if len > MAX_HIT_INTERVAL {
        return Err(Error::IntervalTooLarge {
            len,
            max: MAX_HIT_INTERVAL,
        });
    }
    seg.check_start(x)?;
    let (h_a, h_b) = match target {
        Target::Above => (0.0, 1.0),
        Target::Below => (1.0, 0.0),
    };
    if x == a {
        return Ok(h_a);
    }
    if x == b {
        return Ok(h_b);
    }
    let pot = seg.potential();
    let n = (b - a - 1) as usize;
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for (row, site) in (a + 1..b).enumerate() {
        lower[row] = pot.beta(site);
        upper[row] = pot.alpha(site);
        if row == 0 {
            rhs[row] += pot.beta(site) * h_a;
        }
        if row + 1 == n {
            rhs[row] += pot.alpha(site) * h_b;
        }
    }
    let h = solve_m_tridiagonal(&lower, &upper, &vec![0.0; n], &rhs);
    Ok(h[(x - a - 1) as usize])
}

/// Expected visits to `x` before returning to `i`, from the Green-function
/// system of the chain killed at `i`.
///
/// For `x > i`, with `v(y)` the expected visits to `x` (time 0 included)
/// from `y ∈ (i, x]` before `T_i`:
/// `v(y) = α_y v(y+1) + β_y v(y-1)` for `y < x`, `v(i) = 0`, and
/// `β_x (v(x) - v(x-1)) = 1` since every step right of `x` comes back to `x`.
/// The answer is `α_i v(i+1)`. The case `x < i` is the mirror image.
pub fn oracle_expected_local_time(pot: &Potential, i: i64, x: i64) -> Result<f64> {
    if x == i {
        return Err(Error::param("x", "x = i: the return visit is not a local time"));
    }
    let dist = (x - i).unsigned_abs();
    if dist > MAX_LOCAL_TIME_DISTANCE {
        return Err(Error::IntervalTooLarge {
            len: dist,
            max: MAX_LOCAL_TIME_DISTANCE,
        });
    }
    pot.try_s(i)?;
    pot.try_s(x)?;
    let n = dist as usize;
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    if x > i {
        // unknowns y = i+1 ..= x
        for (row, y) in (i + 1..=x).enumerate() {
            if y == x {
                lower[row] = pot.beta(y);
                rhs[row] = 1.0;
            } else {
                lower[row] = pot.beta(y);
                upper[row] = pot.alpha(y);
            }
        }
        let v = solve_m_tridiagonal(&lower, &upper, &vec![0.0; n], &rhs);
        Ok(pot.alpha(i) * v[0])
    } else {
        // unknowns y = x ..= i-1
        for (row, y) in (x..i).enumerate() {
            if y == x {
                upper[row] = pot.alpha(y);
                rhs[row] = 1.0;
            } else {
                lower[row] = pot.beta(y);
                upper[row] = pot.alpha(y);
            }
        }
        let v = solve_m_tridiagonal(&lower, &upper, &vec![0.0; n], &rhs);
        Ok(pot.beta(i) * v[n - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_a_small_system() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [0 0 4] -> x = [1 2 3]
        let x = solve_m_tridiagonal(&[1.0; 3], &[1.0; 3], &[0.0; 3], &[0.0, 0.0, 4.0]);
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        // with a leak on the middle row: [2 -1 0; -1 3 -1; 0 -1 1] x = [0 2 1] -> x = [1 2 3]
        let x = solve_m_tridiagonal(&[1.0, 1.0, 1.0], &[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 2.0, 1.0]);
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn oracle_examples() {
        let half = Potential::constant(0.5, -5, 5).unwrap();
        let seg = ChainSegment::new(&half, -2, 2).unwrap();
        assert_abs_diff_eq!(oracle_hit_prob(&seg, 0, Target::Above).unwrap(), 0.5, epsilon = 1e-15);
        let p3 = Potential::constant(0.3, -5, 5).unwrap();
        let seg = ChainSegment::new(&p3, 0, 2).unwrap();
        assert_abs_diff_eq!(oracle_hit_prob(&seg, 1, Target::Above).unwrap(), 0.3, epsilon = 1e-15);

        assert_abs_diff_eq!(oracle_expected_local_time(&half, 0, 4).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle_expected_local_time(&half, 0, -4).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle_expected_local_time(&p3, 0, 2).unwrap(), 9.0 / 49.0, epsilon = 1e-14);
        let p7 = Potential::constant(0.7, -5, 5).unwrap();
        assert_abs_diff_eq!(oracle_expected_local_time(&p7, 0, -2).unwrap(), 9.0 / 49.0, epsilon = 1e-14);
    }

    #[test]
    fn size_caps() {
        let big = Potential::constant(0.5, -6000, 6000).unwrap();
        let seg = ChainSegment::new(&big, -6000, 6000).unwrap();
        assert!(matches!(
            oracle_hit_prob(&seg, 0, Target::Above),
            Err(Error::IntervalTooLarge { .. })
        ));
        assert!(oracle_expected_local_time(&big, 0, 1001).is_err());
        assert!(oracle_expected_local_time(&big, 0, 0).is_err());
    }
}
