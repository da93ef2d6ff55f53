use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use sinai_core::analysis::{gamma_n, margin_n, window_bound};
use sinai_core::env::*;
use sinai_core::potential::Potential;

#[test]
fn two_point_reference_constants() {
    let d = EnvDistribution::two_point(0.3);
    assert_abs_diff_eq!(d.lambda(), 0.847_297_860_387_203_6, epsilon = 1e-15);
    let (mean, var) = d.epsilon_moments();
    assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(var, 0.717_913_664_216_733, epsilon = 1e-14);
    assert!(check_hypotheses(&d, 1e-12).all_ok());
}

#[test]
fn scale_constants() {
    assert_abs_diff_eq!(gamma_n(1_000_000).unwrap(), 45.325_013_531_676_40, epsilon = 1e-10);
    assert_abs_diff_eq!(gamma_n(16).unwrap(), 15.009_966_008_698_50, epsilon = 1e-10);
    assert!(gamma_n(15).is_err());
    let ln_ln = (1e6f64).ln().ln();
    assert_abs_diff_eq!(margin_n(1_000_000).unwrap(), 12.0 * ln_ln, epsilon = 1e-12);
    let sigma = EnvDistribution::two_point(0.3).sigma();
    assert_eq!(window_bound(1_000_000, sigma), 266);
    assert_eq!(window_bound(10_000, sigma), 119);
}

#[test]
fn two_point_frequencies() {
    let env = Environment::new(EnvDistribution::two_point(0.3), 5).unwrap();
    let alphas = env.alphas(-50_000, 49_999);
    let low = alphas.iter().filter(|a| **a == 0.3).count();
    assert_eq!(alphas.iter().filter(|a| **a == 0.7).count() + low, 100_000);
    // 3 s.e. of a fair coin over 1e5 draws is about 474
    assert!((low as i64 - 50_000).abs() < 474, "{low}");
}

#[test]
fn uniform_law_stays_in_support() {
    let env = Environment::new(EnvDistribution::uniform(0.2), 9).unwrap();
    let alphas = env.alphas(-1000, 1000);
    assert!(alphas.iter().all(|a| (0.2..=0.8).contains(a)));
    let mean = alphas.iter().sum::<f64>() / alphas.len() as f64;
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
}

#[test]
fn invalid_laws() {
    assert!(Environment::new(EnvDistribution::two_point(0.0), 1).is_err());
    assert!(Environment::new(EnvDistribution::uniform(0.5), 1).is_err());
    assert!(EnvDistribution::tabulated(vec![0.3, 0.7], vec![1.0], 0.3).is_err());
    let skew = EnvDistribution::tabulated(vec![0.3, 0.6], vec![1.0, 1.0], 0.3).unwrap();
    let h = check_hypotheses(&skew, 1e-9);
    assert!(!h.zero_mean_ok && h.nondegenerate_ok && h.eta0_ok);
}

#[test]
fn config_documents_reject_unknown_keys() {
    let ok: EnvDistribution = serde_json::from_str(r#"{"kind":"two_point","a":0.3}"#).unwrap();
    assert_eq!(ok, EnvDistribution::two_point(0.3));
    assert!(serde_json::from_str::<EnvDistribution>(r#"{"kind":"two_point","a":0.3,"q":1}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sites_do_not_depend_on_realization_order(seed in any::<u64>(), lo in -3000i64..0, hi in 0i64..3000) {
        let env = Environment::new(EnvDistribution::uniform(0.1), seed).unwrap();
        let whole = env.alphas(lo, hi);
        for (k, i) in (lo..=hi).enumerate().step_by(97) {
            prop_assert_eq!(env.alpha(i), whole[k]);
        }
        let mut grown = Potential::from_env(env.clone(), 0, 0).unwrap();
        grown.ensure(lo, 0).unwrap();
        grown.ensure(0, hi).unwrap();
        let direct = Potential::from_env(env, lo, hi).unwrap();
        for i in (lo..=hi).step_by(61) {
            prop_assert!((grown.s(i) - direct.s(i)).abs() < 1e-9);
        }
    }

    #[test]
    fn potential_increments_are_site_epsilons(seed in any::<u64>()) {
        let env = Environment::new(EnvDistribution::two_point(0.3), seed).unwrap();
        let pot = Potential::from_env(env.clone(), -200, 200).unwrap();
        prop_assert_eq!(pot.s(0), 0.0);
        for k in -199..=200 {
            prop_assert!((pot.s(k) - pot.s(k - 1) - env.epsilon_at(k)).abs() < 1e-12);
        }
    }
}
