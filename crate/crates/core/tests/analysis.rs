use proptest::prelude::*;
use sinai_core::analysis::{
    basic_valley, is_deep_valley_around_zero, ladder_epochs, refine_left, refine_right,
    slice_upper_bound, stopping_time_down, stopping_time_up, BasicValley, Valley,
};
use sinai_core::env::{EnvDistribution, Environment};
use sinai_core::potential::Potential;

fn build(lo: i64, steps: &[i8]) -> Potential {
    let mut s = Vec::with_capacity(steps.len() + 1);
    let mut acc = 0.0;
    s.push(acc);
    for d in steps {
        acc += f64::from(*d) * 0.5;
        s.push(acc);
    }
    Potential::from_values(lo, s)
}

/// All pairs `p` before-or-at `q` in `order`; maximal `S_p - S_q`, ties by
/// `(|q|, |p|, q, p)`.
fn brute_refine(pot: &Potential, order: &[i64], bottom: i64) -> (i64, i64, f64) {
    let mut best: Option<(f64, (u64, u64, i64, i64), i64, i64)> = None;
    for (i, &p) in order.iter().enumerate() {
        for &q in &order[i..] {
            let d = pot.s(p) - pot.s(q);
            if d <= 0.0 {
                continue;
            }
            let key = (q.unsigned_abs(), p.unsigned_abs(), q, p);
            let better = match best {
                None => true,
                Some((bd, bk, _, _)) => d > bd || (d == bd && key < bk),
            };
            if better {
                best = Some((d, key, p, q));
            }
        }
    }
    match best {
        Some((d, _, p, q)) => (p, q, d),
        None => (bottom, bottom, 0.0),
    }
}

/// Narrowest `(M', m, M'')` around 0 passing the independent checker.
fn brute_basic(pot: &Potential, gamma: f64, margin: f64) -> Option<(i64, i64, i64)> {
    let (lo, hi) = (pot.lo(), pot.hi());
    let mut best: Option<((i64, u64, i64), (i64, i64, i64))> = None;
    for l in lo..=0 {
        for r in 0..=hi {
            for m in l..=r {
                let v = Valley::new(pot, l, m, r).unwrap();
                if !is_deep_valley_around_zero(pot, &v, gamma, margin) {
                    continue;
                }
                let key = (r - l, m.unsigned_abs(), m);
                if best.map_or(true, |(k, _)| key < k) {
                    best = Some((key, (l, m, r)));
                }
            }
        }
    }
    best.map(|(_, t)| t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn refinements_match_exhaustive_search(
        steps in prop::collection::vec(-3i8..=3, 1..200),
        shift in 0usize..200,
    ) {
        let lo = -((shift % (steps.len() + 1)) as i64);
        let pot = build(lo, &steps);
        let hi = pot.hi();
        // bottom anywhere: the refinement only reads the flank
        let bottom = lo + (shift as i64 * 7) % (hi - lo + 1);
        let v = Valley { left: lo, bottom, right: hi, depth: 0.0 };

        let r = refine_right(&pot, &v).unwrap();
        let order: Vec<i64> = (bottom..=hi).collect();
        prop_assert_eq!((r.peak, r.bottom, r.drop), brute_refine(&pot, &order, bottom));

        let l = refine_left(&pot, &v).unwrap();
        let order: Vec<i64> = (lo..=bottom).rev().collect();
        prop_assert_eq!((l.peak, l.bottom, l.drop), brute_refine(&pot, &order, bottom));
    }

    #[test]
    fn basic_valley_matches_exhaustive_search(
        steps in prop::collection::vec(-2i8..=2, 4..36),
        shift in 0usize..36,
        gamma in 1u8..5,
        margin in 0u8..3,
    ) {
        let lo = -((shift % (steps.len() + 1)) as i64);
        let mut pot = build(lo, &steps);
        let (gamma, margin) = (f64::from(gamma) * 0.5, f64::from(margin) * 0.5);
        let got = basic_valley(&mut pot, gamma, margin, 1_000).unwrap();
        let want = brute_basic(&pot, gamma, margin);
        prop_assert_eq!(got.map(|v| (v.m_prime, v.m_n, v.m_right)), want);
        if let Some(v) = got {
            prop_assert!(is_deep_valley_around_zero(&pot, &v.as_valley(), gamma, margin));
        }
    }

    #[test]
    fn stopping_times_are_stable_under_extension(seed in 0u64..1000, a in 0.5f64..6.0) {
        let env = Environment::new(EnvDistribution::two_point(0.3), seed).unwrap();
        let mut small = Potential::from_env(env.clone(), 0, 0).unwrap();
        let mut big = Potential::from_env(env, -50, 5_000).unwrap();
        let up = stopping_time_up(&mut small, a, 0, 5_000).unwrap();
        prop_assert_eq!(up, stopping_time_up(&mut big, a, 0, 5_000).unwrap());
        prop_assert_eq!(up, stopping_time_up(&mut small, a, 0, 5_000).unwrap());
        let down = stopping_time_down(&mut small, a, 0, 5_000).unwrap();
        prop_assert_eq!(down, stopping_time_down(&mut big, a, 0, 5_000).unwrap());
        let l = ladder_epochs(&mut small, 5, 5_000).unwrap();
        prop_assert_eq!(l, ladder_epochs(&mut big, 5, 5_000).unwrap());
    }
}

#[test]
fn basic_valley_is_extension_stable() {
    for seed in 0..20 {
        let env = Environment::new(EnvDistribution::two_point(0.3), seed).unwrap();
        let mut a = Potential::from_env(env.clone(), 0, 0).unwrap();
        let mut b = Potential::from_env(env, -6000, 6000).unwrap();
        let va = basic_valley(&mut a, 20.0, 4.0, 6000).unwrap();
        let vb = basic_valley(&mut b, 20.0, 4.0, 6000).unwrap();
        assert_eq!(va, vb, "seed {seed}");
        if let Some(v) = va {
            assert!(is_deep_valley_around_zero(&b, &v.as_valley(), 20.0, 4.0));
        }
    }
}

#[test]
fn slice_bound_holds_on_sampled_valleys() {
    let dist = EnvDistribution::two_point(0.3);
    let lambda = dist.lambda();
    for seed in 0..30 {
        let env = Environment::new(dist.clone(), seed).unwrap();
        let mut pot = Potential::from_env(env, 0, 0).unwrap();
        let Some(v): Option<BasicValley> = basic_valley(&mut pot, 20.0, 4.0, 6000).unwrap() else {
            continue;
        };
        for c in [1.0, 4.0, 16.0] {
            let b = slice_upper_bound(&pot, &v, c, lambda / 4.0, lambda).unwrap();
            for f in [b.left, b.right] {
                if f.overflow == 0 {
                    assert!(f.holds(), "seed {seed} c {c}: {b:?}");
                } else {
                    // uncovered sites sit above S_m + Γ + Λ
                    let slack = f.overflow as f64 * (-(v.gamma + lambda)).exp();
                    assert!(f.sum <= f.bound + slack, "seed {seed} c {c}: {b:?}");
                }
            }
        }
    }
}
