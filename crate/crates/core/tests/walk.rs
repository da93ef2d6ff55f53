use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::Rng;
use sinai_core::chain::expected_local_time;
use sinai_core::env::{EnvDistribution, Environment};
use sinai_core::potential::Potential;
use sinai_core::seeds::walk_rng;
use sinai_core::walk::*;

fn two_point(seed: u64) -> Potential {
    let env = Environment::new(EnvDistribution::two_point(0.3), seed).unwrap();
    Potential::from_env(env, 0, 0).unwrap()
}

#[test]
fn golden_trajectory() {
    let env = Environment::new(EnvDistribution::two_point(0.3), 7).unwrap();
    let mut pot = Potential::from_env(env.clone(), 0, 0).unwrap();
    let out = run(&mut pot, 11, 1000, 0).unwrap();
    assert_eq!(out.field.digest(), 0x8ebf_b630_da4b_4d77);
    assert_eq!(out.state, WalkState { position: -26, steps: 1000 });
    assert_eq!(out.field.visited_range(), Some((-32, 11)));
    let s = stats(&out.field).unwrap();
    assert_eq!((s.l_star, s.favorites, s.fav_spread), (77, vec![-1], 0));
    assert_eq!(concentration_radius(&out.field, 0.5).unwrap(), 9);

    // the step loop written out by hand
    let mut rng = walk_rng(11);
    let mut x = 0i64;
    let mut path = Vec::new();
    for _ in 0..1000 {
        let u: f64 = rng.random();
        x += if u < env.alpha(x) { 1 } else { -1 };
        path.push(x);
    }
    assert_eq!(LocalTimeField::from_path(&path), out.field);
}

#[test]
fn checkpoints_match_separate_runs() {
    let mut seen = Vec::new();
    run_checkpoints(&mut two_point(3), 5, &[16, 64, 1000], 0, |n, f, st| {
        seen.push((n, f.clone(), st));
    })
    .unwrap();
    for (n, f, st) in seen {
        let out = run(&mut two_point(3), 5, n, 0).unwrap();
        assert_eq!(out.field, f);
        assert_eq!(out.state, st);
    }
    assert!(run_checkpoints(&mut two_point(3), 5, &[10, 10], 0, |_, _, _| {}).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn radius_matches_exhaustive_scan(env_seed in 0u64..10_000, walk_seed in 0u64..10_000,
                                      n in 1u64..2_000, beta in 0.0f64..0.999) {
        let out = run(&mut two_point(env_seed), walk_seed, n, 0).unwrap();
        prop_assert_eq!(out.field.total(), n);
        prop_assert_eq!(out.field.iter().map(|(_, c)| c).sum::<u64>(), n);
        let r = concentration_radius(&out.field, beta).unwrap();
        prop_assert_eq!(r, exhaustive_radius(&out.field, beta).unwrap());
        let smaller = concentration_radius(&out.field, beta / 2.0).unwrap();
        prop_assert!(smaller <= r);
    }

    #[test]
    fn stats_are_consistent(env_seed in 0u64..10_000, walk_seed in 0u64..10_000, n in 1u64..3_000) {
        let out = run(&mut two_point(env_seed), walk_seed, n, 0).unwrap();
        let s = stats(&out.field).unwrap();
        prop_assert!(out.field.iter().all(|(_, c)| c <= s.l_star));
        for f in &s.favorites {
            prop_assert_eq!(out.field.get(*f), s.l_star);
        }
        prop_assert_eq!(s.fav_spread, (s.favorites[s.favorites.len() - 1] - s.favorites[0]) as u64);
    }
}

#[test]
fn symmetric_walk_laws() {
    let trials = 100_000u64;
    let mut half = Potential::constant(0.5, -200, 200).unwrap();
    let mut first_up = 0u64;
    let mut positive = 0u64;
    for seed in 0..trials {
        if hitting_time(&mut half, seed, 1, 0, 1).unwrap() == Some(1) {
            first_up += 1;
        }
        if run(&mut half, seed + trials, 100, 0).unwrap().state.position > 0 {
            positive += 1;
        }
    }
    let p = first_up as f64 / trials as f64;
    let se = (0.25 / trials as f64).sqrt();
    assert!((p - 0.5).abs() < 3.0 * se, "P[T_1 = 1] = {p}");
    // P[X_100 > 0] = (1 - P[X_100 = 0]) / 2 with P[X_100 = 0] = C(100, 50) / 2^100
    let p0 = 0.079_589_237_387_178_73;
    let want = (1.0 - p0) / 2.0;
    let got = positive as f64 / trials as f64;
    let se = (want * (1.0 - want) / trials as f64).sqrt();
    assert!((got - want).abs() < 3.0 * se, "P[X_100 > 0] = {got} vs {want}");
}

#[test]
fn excursions_match_exact_values() {
    let mut half = Potential::constant(0.5, -10, 10).unwrap();
    let e = excursion_local_time(&mut half, 1, 0, &[2], 100_000, u64::MAX).unwrap();
    assert!((e.mean - 1.0).abs() < 3.0 * e.std_err, "{e:?}");

    let mut p3 = Potential::constant(0.3, -10, 10).unwrap();
    let e = excursion_local_time(&mut p3, 2, 0, &[2], 100_000, u64::MAX).unwrap();
    assert_abs_diff_eq!(expected_local_time(&p3, 0, 2).unwrap(), 9.0 / 49.0, epsilon = 1e-14);
    assert!((e.mean - 9.0 / 49.0).abs() < 3.0 * e.std_err, "{e:?}");
    assert!(!e.exhausted);
}
