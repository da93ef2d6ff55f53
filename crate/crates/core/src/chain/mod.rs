//! Closed-form first-passage and occupation quantities for the quenched
//! birth–death chain, with independent linear-solve oracles in [`oracle`].
//!
//! Every exponential sum is evaluated as `Σ e^{S_k - S_ref - shift}` with
//! `shift` the running maximum, so potentials with `|S| ≫ 700` stay finite.

pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;

pub use oracle::{oracle_expected_local_time, oracle_hit_prob};

/// Which end of the segment is reached first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// `T_a < T_b`
    Below,
    /// `T_b < T_a`
    Above,
}

/// The chain restricted to `[a, b]`, absorbed at both ends.
#[derive(Debug, Clone, Copy)]
pub struct ChainSegment<'p> {
    pot: &'p Potential,
    a: i64,
    b: i64,
}

impl<'p> ChainSegment<'p> {
    pub fn new(pot: &'p Potential, a: i64, b: i64) -> Result<Self> {
        if a >= b {
            return Err(Error::param("interval", format!("need a < b, got [{a}, {b}]")));
        }
        pot.try_s(a)?;
        pot.try_s(b)?;
        Ok(ChainSegment { pot, a, b })
    }

    pub fn bounds(&self) -> (i64, i64) {
        (self.a, self.b)
    }

    pub fn potential(&self) -> &'p Potential {
        self.pot
    }

    fn check_start(&self, x: i64) -> Result<()> {
        if x < self.a || x > self.b {
            return Err(Error::param(
                "x",
                format!("start {x} outside [{}, {}]", self.a, self.b),
            ));
        }
        Ok(())
    }

    /// `P_x[T_a < T_b]` (`Below`) or `P_x[T_a > T_b]` (`Above`).
    ///
    /// With `ρ_k = e^{S_k - S_a}`, `P_x[T_b < T_a] = Σ_{k=a}^{x-1} ρ_k / Σ_{k=a}^{b-1} ρ_k`
    /// and the complement uses the tail `Σ_{k=x}^{b-1}`. The `k = a` term is the
    /// `+1` of the classical statement. Starting on a boundary returns 0 or 1.
    pub fn hit_prob(&self, x: i64, target: Target) -> Result<f64> {
        self.check_start(x)?;
        let pot = self.pot;
        let shift = (self.a..self.b)
            .map(|k| pot.s(k))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut head = 0.0;
        let mut tail = 0.0;
        for k in self.a..self.b {
            let w = (pot.s(k) - shift).exp();
            if k < x {
                head += w;
            } else {
                tail += w;
            }
        }
        let total = head + tail;
        Ok(match target {
            Target::Above => head / total,
            Target::Below => tail / total,
        })
    }
}

/// Convenience wrapper over [`ChainSegment::hit_prob`].
pub fn hit_prob(pot: &Potential, a: i64, b: i64, x: i64, target: Target) -> Result<f64> {
    ChainSegment::new(pot, a, b)?.hit_prob(x, target)
}

/// `E_i[ℒ(x, T_i)]`: expected visits to `x` during one excursion from `i`,
/// counting steps `1..=T_i`.
///
/// For `x > i`: `α_i P_{i+1}[T_x < T_i] / (β_x P_{x-1}[T_x > T_i])`;
/// for `x < i`: `β_i P_{i-1}[T_x < T_i] / (α_x P_{x+1}[T_x > T_i])`.
pub fn expected_local_time(pot: &Potential, i: i64, x: i64) -> Result<f64> {
    if x == i {
        return Err(Error::param("x", "x = i: the return visit is not a local time"));
    }
    if x > i {
        let seg = ChainSegment::new(pot, i, x)?;
        let to_x = seg.hit_prob(i + 1, Target::Above)?;
        let to_i = seg.hit_prob(x - 1, Target::Below)?;
        Ok(pot.alpha(i) * to_x / (pot.beta(x) * to_i))
    } else {
        let seg = ChainSegment::new(pot, x, i)?;
        let to_x = seg.hit_prob(i - 1, Target::Below)?;
        let to_i = seg.hit_prob(x + 1, Target::Above)?;
        Ok(pot.beta(i) * to_x / (pot.alpha(x) * to_i))
    }
}

/// `E_m[ℒ(x, T_m)]` for every `x` in `[lo, hi]`, `x ≠ m`, as `(x, value)` pairs.
///
/// Same formula as [`expected_local_time`], with the partial sums accumulated
/// outward from `m` so a whole flank costs O(length) instead of O(length²).
pub fn expected_local_time_profile(
    pot: &Potential,
    m: i64,
    lo: i64,
    hi: i64,
) -> Result<Vec<(i64, f64)>> {
    pot.try_s(m)?;
    let mut out = Vec::new();
    if lo < m {
        pot.try_s(lo)?;
        // Flank x < m: segment [x, m], sums over k in [x, m).
        let mut sum = LogSum::new();
        let mut left = Vec::new();
        for x in (lo..m).rev() {
            sum.add(pot.s(x) - pot.s(m));
            let to_x = (pot.s(m - 1) - pot.s(m) - sum.ln()).exp();
            let to_m = (pot.s(x) - pot.s(m) - sum.ln()).exp();
            if x <= hi {
                left.push((x, pot.beta(m) * to_x / (pot.alpha(x) * to_m)));
            }
        }
        left.reverse();
        out.extend(left);
    }
    if hi > m {
        pot.try_s(hi)?;
        // Flank x > m: segment [m, x], sums over k in [m, x).
        let mut sum = LogSum::new();
        for x in m + 1..=hi {
            sum.add(pot.s(x - 1) - pot.s(m));
            let to_x = (-sum.ln()).exp();
            let to_m = (pot.s(x - 1) - pot.s(m) - sum.ln()).exp();
            if x >= lo {
                out.push((x, pot.alpha(m) * to_x / (pot.beta(x) * to_m)));
            }
        }
    }
    Ok(out)
}

/// Running `log Σ e^{v}` with max-shift rescaling.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    shift: f64,
    acc: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            shift: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    fn add(&mut self, v: f64) {
        if v > self.shift {
            self.acc = self.acc * (self.shift - v).exp() + 1.0;
            self.shift = v;
        } else {
            self.acc += (v - self.shift).exp();
        }
    }

    fn ln(&self) -> f64 {
        self.shift + self.acc.ln()
    }
}

/// `(lower, value, upper)` with `lower ≤ E_m[ℒ(k, T_m)] ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }

    /// [`holds`](Self::holds) up to a relative rounding allowance. Laws whose
    /// atoms sit at `η_0` and `1 - η_0` attain the lower bound exactly, and the
    /// two sides are then rounded independently.
    pub fn holds_within(&self, rel: f64) -> bool {
        self.lower <= self.value * (1.0 + rel) && self.value <= self.upper * (1.0 + rel)
    }

    /// `value` within `rel` of `lower`.
    pub fn is_tight(&self, rel: f64) -> bool {
        (self.value - self.lower).abs() <= rel * self.lower
    }
}

/// `η_0/(1-η_0) e^{-(S_k - S_m)} ≤ E_m[ℒ(k, T_m)] ≤ η_0^{-1} e^{-(S_k - S_m)}`.
pub fn sandwich_bounds(pot: &Potential, m: i64, k: i64, eta0: f64) -> Result<Sandwich> {
    let value = expected_local_time(pot, m, k)?;
    let weight = (-(pot.s(k) - pot.s(m))).exp();
    Ok(Sandwich {
        lower: eta0 / (1.0 - eta0) * weight,
        value,
        upper: weight / eta0,
    })
}

/// Upper bounds on the order in which the potential leaves `(-a, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaldBounds {
    /// `Λ = log((1-η_0)/η_0)`
    pub lambda: f64,
    /// Bound on `Q[V⁻_a < V⁺_d]`: `(d+Λ)/(d+a+Λ)`.
    pub down_first: f64,
    /// Bound on `Q[V⁻_a > V⁺_d]`: `(a+Λ)/(d+a+Λ)`.
    pub up_first: f64,
}

pub fn wald_bound(a: f64, d: f64, eta0: f64) -> Result<WaldBounds> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", format!("{a} must be positive")));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::param("d", format!("{d} must be positive")));
    }
    if !(eta0 > 0.0 && eta0 < 0.5) {
        return Err(Error::param("eta0", format!("{eta0} must lie in (0, 1/2)")));
    }
    let lambda = ((1.0 - eta0) / eta0).ln();
    Ok(WaldBounds {
        lambda,
        down_first: (d + lambda) / (d + a + lambda),
        up_first: (a + lambda) / (d + a + lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_walk_hits_either_side_equally() {
        let p = Potential::constant(0.5, -5, 5).unwrap();
        assert_abs_diff_eq!(hit_prob(&p, -2, 2, 0, Target::Above).unwrap(), 0.5, epsilon = 1e-15);
        // gambler's ruin: (x - a)/(b - a)
        assert_abs_diff_eq!(hit_prob(&p, -1, 3, 1, Target::Above).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(hit_prob(&p, -1, 3, 2, Target::Above).unwrap(), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn one_step_segment() {
        let p = Potential::constant(0.3, -3, 3).unwrap();
        assert_abs_diff_eq!(hit_prob(&p, 0, 2, 1, Target::Above).unwrap(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(hit_prob(&p, 0, 2, 1, Target::Below).unwrap(), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn boundary_starts_are_trivial() {
        let p = Potential::constant(0.3, -3, 3).unwrap();
        assert_eq!(hit_prob(&p, -2, 2, -2, Target::Above).unwrap(), 0.0);
        assert_eq!(hit_prob(&p, -2, 2, 2, Target::Above).unwrap(), 1.0);
        assert_eq!(hit_prob(&p, -2, 2, -2, Target::Below).unwrap(), 1.0);
        assert!(hit_prob(&p, -2, 2, 3, Target::Above).is_err());
        assert!(hit_prob(&p, 2, 2, 2, Target::Above).is_err());
        assert!(hit_prob(&p, -9, 2, 0, Target::Above).is_err());
    }

    #[test]
    fn expected_local_time_examples() {
        let half = Potential::constant(0.5, -10, 10).unwrap();
        for (i, x) in [(0, 1), (0, 5), (-3, 4), (2, -7)] {
            assert_abs_diff_eq!(expected_local_time(&half, i, x).unwrap(), 1.0, epsilon = 1e-12);
        }
        let p3 = Potential::constant(0.3, -5, 5).unwrap();
        assert_abs_diff_eq!(
            expected_local_time(&p3, 0, 2).unwrap(),
            9.0 / 49.0,
            epsilon = 1e-14
        );
        let p7 = Potential::constant(0.7, -5, 5).unwrap();
        assert_abs_diff_eq!(
            expected_local_time(&p7, 0, -2).unwrap(),
            9.0 / 49.0,
            epsilon = 1e-14
        );
        assert!(expected_local_time(&p3, 1, 1).is_err());
    }

    #[test]
    fn profile_matches_pointwise_formula() {
        let alphas: Vec<f64> = (0..41).map(|k| 0.3 + 0.4 * ((k * 7 % 11) as f64 / 10.0)).collect();
        let p = Potential::from_alphas(-20, alphas).unwrap();
        for m in [-5, 0, 3] {
            let prof = expected_local_time_profile(&p, m, -20, 20).unwrap();
            assert_eq!(prof.len(), 40);
            for (x, v) in prof {
                let direct = expected_local_time(&p, m, x).unwrap();
                assert!((v - direct).abs() <= 1e-12 * direct.max(1.0), "m={m} x={x}");
            }
        }
        let part = expected_local_time_profile(&p, 0, 5, 8).unwrap();
        assert_eq!(part.iter().map(|e| e.0).collect::<Vec<_>>(), vec![5, 6, 7, 8]);
    }

    #[test]
    fn sandwich_examples() {
        let p3 = Potential::constant(0.3, -5, 5).unwrap();
        let s = sandwich_bounds(&p3, 0, 2, 0.3).unwrap();
        assert_abs_diff_eq!(s.value, 9.0 / 49.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.lower, 3.0 / 7.0 * 9.0 / 49.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.upper, 10.0 / 3.0 * 9.0 / 49.0, epsilon = 1e-14);
        assert!(s.holds());

        let half = Potential::constant(0.5, -5, 5).unwrap();
        let s = sandwich_bounds(&half, 0, 3, 0.5).unwrap();
        assert_eq!((s.lower, s.upper), (1.0, 2.0));
        assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-14);
        assert!(sandwich_bounds(&half, 1, 1, 0.5).is_err());
    }

    #[test]
    fn wald_examples() {
        let w = wald_bound(3.0, 3.0, 0.3).unwrap();
        assert_abs_diff_eq!(w.lambda, 0.847_297_860_387_203_6, epsilon = 1e-15);
        assert_eq!(w.down_first, w.up_first);
        assert_abs_diff_eq!(w.down_first, (3.0 + w.lambda) / (6.0 + w.lambda), epsilon = 1e-15);
        assert!(w.down_first + w.up_first >= 1.0);
        let far = wald_bound(1e9, 1.0, 0.3).unwrap();
        assert!(far.down_first < 1e-8);
        assert!(wald_bound(0.0, 1.0, 0.3).is_err());
        assert!(wald_bound(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn log_sum_rescales() {
        let mut s = LogSum::new();
        for v in [-1000.0, 800.0, 800.0, 0.0] {
            s.add(v);
        }
        assert_abs_diff_eq!(s.ln(), 800.0 + 2f64.ln(), epsilon = 1e-12);
    }
}
