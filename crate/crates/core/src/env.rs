//! Random environments: the site law `α_0`, its hypothesis checks, and
//! counter-based realizations `α_i` keyed by `(seed, i)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::zigzag;

/// Sites are realized in blocks of this many consecutive indices; block `b`
/// covers `[64 b, 64 b + 63]` and draws from ChaCha stream `zigzag(b)`.
pub(crate) const BLOCK: i64 = 64;

fn default_half() -> f64 {
    0.5
}

/// Law of a single site probability `α_0`.
///
/// Serializes as a flat key-value record tagged by `kind`, e.g.
/// `kind = "two_point", a = 0.3, p = 0.5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvDistribution {
    /// Mass `p` at `a`, `1 - p` at `b` (default `b = 1 - a`).
    TwoPoint {
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
        #[serde(default = "default_half")]
        p: f64,
        /// Defaults to the distance of the support from {0, 1}.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta0: Option<f64>,
    },
    /// Uniform on `[eta0, 1 - eta0]`.
    Uniform { eta0: f64 },
    /// Finite support `values` with (unnormalized) `weights`.
    Tabulated {
        values: Vec<f64>,
        weights: Vec<f64>,
        eta0: f64,
    },
}

/// Outcome of checking the three standing hypotheses on a law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `E[log((1-α)/α)]`.
    pub mean: f64,
    /// `Var[log((1-α)/α)]`.
    pub variance: f64,
    pub zero_mean_ok: bool,
    pub nondegenerate_ok: bool,
    pub eta0_ok: bool,
}

impl HypothesisReport {
    pub fn all_ok(&self) -> bool {
        self.zero_mean_ok && self.nondegenerate_ok && self.eta0_ok
    }
}

/// `log((1-α)/α)`, the potential increment contributed by a site.
pub fn epsilon_of(alpha: f64) -> f64 {
    ((1.0 - alpha) / alpha).ln()
}

impl EnvDistribution {
    /// Symmetric two-point law: `a` and `1 - a` with equal weights.
    pub fn two_point(a: f64) -> Self {
        EnvDistribution::TwoPoint {
            a,
            b: None,
            p: 0.5,
            eta0: None,
        }
    }

    pub fn uniform(eta0: f64) -> Self {
        EnvDistribution::Uniform { eta0 }
    }

    /// Finite support, validated and normalized at load time.
    pub fn tabulated(values: Vec<f64>, weights: Vec<f64>, eta0: f64) -> Result<Self> {
        let d = EnvDistribution::Tabulated {
            values,
            weights,
            eta0,
        };
        d.validate()?;
        Ok(d)
    }

    /// Regularity constant `η_0`.
    pub fn eta0(&self) -> f64 {
        match self {
            EnvDistribution::TwoPoint { a, b, eta0, .. } => eta0.unwrap_or_else(|| {
                let b = b.unwrap_or(1.0 - a);
                a.min(1.0 - a).min(b).min(1.0 - b)
            }),
            EnvDistribution::Uniform { eta0 } => *eta0,
            EnvDistribution::Tabulated { eta0, .. } => *eta0,
        }
    }

    /// `Λ = log((1-η_0)/η_0)`, the largest possible `|ε_i|`.
    pub fn lambda(&self) -> f64 {
        epsilon_of(self.eta0())
    }

    pub fn validate(&self) -> Result<()> {
        let eta0 = self.eta0();
        if !(eta0 > 0.0 && eta0 < 0.5) {
            return Err(Error::InvalidDistribution(format!(
                "eta0 = {eta0} must lie in (0, 1/2)"
            )));
        }
        let in_support = |v: f64| v >= eta0 && v <= 1.0 - eta0;
        match self {
            EnvDistribution::TwoPoint { a, p, .. } => {
                let b = self.second_atom();
                if !(*p >= 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidDistribution(format!(
                        "weight p = {p} must lie in [0, 1]"
                    )));
                }
                for v in [*a, b] {
                    if !(v > 0.0 && v < 1.0) || !in_support(v) {
                        return Err(Error::InvalidDistribution(format!(
                            "atom {v} outside [eta0, 1 - eta0] = [{eta0}, {}]",
                            1.0 - eta0
                        )));
                    }
                }
            }
            EnvDistribution::Uniform { .. } => {}
            EnvDistribution::Tabulated { values, weights, .. } => {
                if values.is_empty() || values.len() != weights.len() {
                    return Err(Error::InvalidDistribution(
                        "tabulated law needs equally many values and weights".into(),
                    ));
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(Error::InvalidDistribution(
                        "weights must be finite and nonnegative".into(),
                    ));
                }
                if !(weights.iter().sum::<f64>() > 0.0) {
                    return Err(Error::InvalidDistribution("weights sum to zero".into()));
                }
                if let Some(v) = values.iter().find(|v| !in_support(**v)) {
                    return Err(Error::InvalidDistribution(format!(
                        "value {v} outside [eta0, 1 - eta0]"
                    )));
                }
            }
        }
        Ok(())
    }

    fn second_atom(&self) -> f64 {
        match self {
            EnvDistribution::TwoPoint { a, b, .. } => b.unwrap_or(1.0 - a),
            _ => unreachable!("second_atom on a non two-point law"),
        }
    }

    /// Inverse-CDF map from a uniform draw in `[0, 1)` to a site probability.
    pub(crate) fn alpha_from_uniform(&self, u: f64) -> f64 {
        match self {
            EnvDistribution::TwoPoint { a, p, .. } => {
                if u < *p {
                    *a
                } else {
                    self.second_atom()
                }
            }
            EnvDistribution::Uniform { eta0 } => eta0 + (1.0 - 2.0 * eta0) * u,
            EnvDistribution::Tabulated {
                values, weights, ..
            } => {
                let total: f64 = weights.iter().sum();
                let target = u * total;
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w;
                    if target < acc {
                        return *v;
                    }
                }
                // u * total rounded up to total
                *values.iter().zip(weights).rev().find(|(_, w)| **w > 0.0).unwrap().0
            }
        }
    }

    /// Atoms `(α, probability)` for discrete laws.
    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            EnvDistribution::TwoPoint { a, p, .. } => {
                Some(vec![(*a, *p), (self.second_atom(), 1.0 - p)])
            }
            EnvDistribution::Uniform { .. } => None,
            EnvDistribution::Tabulated {
                values, weights, ..
            } => {
                let total: f64 = weights.iter().sum();
                Some(
                    values
                        .iter()
                        .zip(weights)
                        .map(|(v, w)| (*v, w / total))
                        .collect(),
                )
            }
        }
    }

    /// Mean and variance of `ε_0 = log((1-α_0)/α_0)`.
    ///
    /// Exact sums for discrete laws; for the uniform law the mean is zero by
    /// symmetry and the second moment is a composite Simpson integral.
    pub fn epsilon_moments(&self) -> (f64, f64) {
        match self.atoms() {
            Some(atoms) => {
                let mean: f64 = atoms.iter().map(|(v, w)| w * epsilon_of(*v)).sum();
                let var: f64 = atoms
                    .iter()
                    .map(|(v, w)| w * (epsilon_of(*v) - mean).powi(2))
                    .sum();
                (mean, var)
            }
            None => {
                let eta0 = self.eta0();
                let (lo, hi) = (eta0, 1.0 - eta0);
                let steps = 20_000;
                let h = (hi - lo) / steps as f64;
                let f = |x: f64| epsilon_of(x).powi(2);
                let mut acc = f(lo) + f(hi);
                for k in 1..steps {
                    let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * f(lo + k as f64 * h);
                }
                let second = acc * h / 3.0 / (hi - lo);
                (0.0, second)
            }
        }
    }

    /// `σ`, the standard deviation of `ε_0`.
    pub fn sigma(&self) -> f64 {
        self.epsilon_moments().1.sqrt()
    }
}

/// Evaluates the zero-mean, nondegeneracy and regularity hypotheses.
/// Failures are reported through the flags, never as errors.
pub fn check_hypotheses(dist: &EnvDistribution, tolerance: f64) -> HypothesisReport {
    let (mean, variance) = dist.epsilon_moments();
    HypothesisReport {
        mean,
        variance,
        zero_mean_ok: mean.abs() <= tolerance,
        nondegenerate_ok: variance > tolerance,
        eta0_ok: dist.validate().is_ok(),
    }
}

/// A realized environment. Values are a pure function of `(dist, seed, i)`,
/// so the struct is cheap to clone and share across threads.
#[derive(Debug, Clone)]
pub struct Environment {
    dist: EnvDistribution,
    seed: u64,
    base: ChaCha8Rng,
}

impl Environment {
    pub fn new(dist: EnvDistribution, seed: u64) -> Result<Self> {
        dist.validate()?;
        Ok(Environment {
            dist,
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn distribution(&self) -> &EnvDistribution {
        &self.dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn eta0(&self) -> f64 {
        self.dist.eta0()
    }

    fn block_rng(&self, block: i64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(zigzag(block));
        rng.set_word_pos(0);
        rng
    }

    /// Appends `α_i` for `i in lo..=hi` to `out`.
    pub fn fill_alphas(&self, lo: i64, hi: i64, out: &mut Vec<f64>) {
        if hi < lo {
            return;
        }
        out.reserve((hi - lo + 1) as usize);
        let mut block = lo.div_euclid(BLOCK);
        let mut site = lo;
        while site <= hi {
            let start = block * BLOCK;
            let mut rng = self.block_rng(block);
            for k in start..start + BLOCK {
                let u: f64 = rng.random();
                if k >= site && k <= hi {
                    out.push(self.dist.alpha_from_uniform(u));
                }
            }
            block += 1;
            site = block * BLOCK;
        }
    }

    pub fn alphas(&self, lo: i64, hi: i64) -> Vec<f64> {
        let mut out = Vec::new();
        self.fill_alphas(lo, hi, &mut out);
        out
    }

    pub fn alpha(&self, i: i64) -> f64 {
        self.alphas(i, i)[0]
    }

    /// `ε_i = log((1-α_i)/α_i)`.
    pub fn epsilon_at(&self, i: i64) -> f64 {
        epsilon_of(self.alpha(i))
    }
}

/// Draws an environment; `initial_window` must contain site 0 and is
/// realized eagerly into the returned potential.
pub fn sample_environment(
    dist: EnvDistribution,
    seed: u64,
    initial_window: (i64, i64),
) -> Result<crate::potential::Potential> {
    let (lo, hi) = initial_window;
    if !(lo <= 0 && 0 <= hi) {
        return Err(Error::param(
            "initial_window",
            format!("[{lo}, {hi}] must contain site 0"),
        ));
    }
    let env = Environment::new(dist, seed)?;
    crate::potential::Potential::from_env(env, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_support_is_the_two_atoms() {
        let env = Environment::new(EnvDistribution::two_point(0.3), 99).unwrap();
        let alphas = env.alphas(-500, 500);
        assert!(alphas.iter().all(|&a| a == 0.3 || a == 0.7));
        assert!(alphas.iter().any(|&a| a == 0.3));
        assert!(alphas.iter().any(|&a| a == 0.7));
    }

    #[test]
    fn eta0_above_half_is_rejected() {
        let err = Environment::new(EnvDistribution::uniform(0.6), 1).unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
        assert!(EnvDistribution::uniform(0.0).validate().is_err());
    }

    #[test]
    fn support_outside_unit_interval_is_rejected() {
        let d = EnvDistribution::TwoPoint {
            a: 1.2,
            b: Some(0.5),
            p: 0.5,
            eta0: Some(0.1),
        };
        assert!(d.validate().is_err());
        assert!(EnvDistribution::tabulated(vec![0.05, 0.5], vec![1.0, 1.0], 0.1).is_err());
        assert!(EnvDistribution::tabulated(vec![0.2, 0.8], vec![1.0], 0.1).is_err());
    }

    #[test]
    fn extension_keeps_earlier_sites() {
        let env = Environment::new(EnvDistribution::uniform(0.2), 42).unwrap();
        let small = env.alphas(-10, 10);
        let big = env.alphas(-20, 20);
        assert_eq!(&big[10..31], &small[..]);
        for (k, a) in (-10..=10).zip(&small) {
            assert_eq!(env.alpha(k), *a);
        }
    }

    #[test]
    fn epsilon_values() {
        assert_abs_diff_eq!(epsilon_of(0.3), 0.847_297_860_387_203_6, epsilon = 1e-15);
        assert_eq!(epsilon_of(0.5), 0.0);
        assert_abs_diff_eq!(epsilon_of(0.7), -0.847_297_860_387_203_6, epsilon = 1e-15);
    }

    #[test]
    fn two_point_moments() {
        let r = check_hypotheses(&EnvDistribution::two_point(0.3), 1e-12);
        assert_abs_diff_eq!(r.mean, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.variance, 0.717_913_664_216_733_2, epsilon = 1e-12);
        assert!(r.all_ok());
    }

    #[test]
    fn uniform_is_centered_and_nondegenerate() {
        let r = check_hypotheses(&EnvDistribution::uniform(0.3), 1e-12);
        assert_eq!(r.mean, 0.0);
        assert!(r.variance > 0.0 && r.nondegenerate_ok);
        // Var ≤ Λ² since |ε| ≤ Λ on the support.
        assert!(r.variance < epsilon_of(0.3).powi(2));
    }

    #[test]
    fn skewed_two_point_fails_zero_mean() {
        let d = EnvDistribution::TwoPoint {
            a: 0.3,
            b: Some(0.6),
            p: 0.5,
            eta0: None,
        };
        let r = check_hypotheses(&d, 1e-12);
        assert_abs_diff_eq!(r.mean, 0.220_916_376_139_519_6, epsilon = 1e-12);
        assert!(!r.zero_mean_ok);
        assert!(r.eta0_ok);
    }

    #[test]
    fn distribution_document_round_trips() {
        let d: EnvDistribution =
            serde_json::from_str(r#"{"kind":"two_point","a":0.3,"p":0.5}"#).unwrap();
        assert_eq!(d, EnvDistribution::two_point(0.3));
        assert_abs_diff_eq!(d.eta0(), 0.3, epsilon = 1e-15);
        let bad = serde_json::from_str::<EnvDistribution>(r#"{"kind":"uniform","eta0":0.3,"x":1}"#);
        assert!(bad.is_err());
    }
}
