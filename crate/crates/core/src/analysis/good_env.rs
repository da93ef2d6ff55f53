//! Good environments and the band bound on flank weights.

use serde::{Deserialize, Serialize};

use super::valley::{basic_valley, gamma_n, margin_n, BasicValley};
use crate::chain::expected_local_time_profile;
use crate::env::EnvDistribution;
use crate::error::{Error, Result};
use crate::potential::Potential;

/// Constants of the good-environment predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodEnvParams {
    pub n: u64,
    pub beta: f64,
    pub c0: f64,
    pub c3: f64,
}

impl GoodEnvParams {
    pub fn new(n: u64, beta: f64, c0: f64, c3: f64) -> Result<Self> {
        let p = GoodEnvParams { n, beta, c0, c3 };
        p.validate()?;
        Ok(p)
    }

    /// `c3 = 64 c0²`.
    pub fn with_c0(n: u64, beta: f64, c0: f64) -> Result<Self> {
        Self::new(n, beta, c0, 64.0 * c0 * c0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::param("n", format!("{} < 16", self.n)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::param("beta", format!("{} not in [0, 1)", self.beta)));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::param("c0", format!("{} must be positive", self.c0)));
        }
        if !(self.c3 > 0.0 && self.c3.is_finite()) {
            return Err(Error::param("c3", format!("{} must be positive", self.c3)));
        }
        Ok(())
    }

    /// `c̃ = c3 / (1 - β)²`.
    pub fn c_tilde(&self) -> f64 {
        self.c3 / ((1.0 - self.beta) * (1.0 - self.beta))
    }

    /// Threshold `2 c0 / √c̃` on the off-core occupation.
    pub fn threshold(&self) -> f64 {
        2.0 * self.c0 / self.c_tilde().sqrt()
    }
}

/// `W = ⌈(log n / σ)²⌉`, at least 1.
pub fn window_bound(n: u64, sigma: f64) -> i64 {
    let w = ((n as f64).ln() / sigma).powi(2).ceil();
    (w as i64).max(1)
}

/// Multiple of the natural valley width searched before declaring absence.
pub const SEARCH_FACTOR: i64 = 64;

/// How far `basic_valley` looks before giving up: [`SEARCH_FACTOR`] times the
/// larger of `W` and the natural width `(Γ_n / σ)²` of a `Γ_n`-deep valley.
/// Valley extents are heavy tailed, so the factor is generous.
pub fn search_cap(n: u64, sigma: f64) -> Result<i64> {
    let gamma = gamma_n(n)?;
    let natural = ((gamma / sigma).powi(2).ceil() as i64).max(1);
    Ok(SEARCH_FACTOR * window_bound(n, sigma).max(natural))
}

/// The basic valley at scale `n`: `Γ_n`, margin `12 log log n`, default cap.
pub fn basic_valley_for(pot: &mut Potential, n: u64, sigma: f64) -> Result<Option<BasicValley>> {
    basic_valley(pot, gamma_n(n)?, margin_n(n)?, search_cap(n, sigma)?)
}

/// `Σ_{j ∈ Θ̃} E_{m_n}[ℒ(j, T_{m_n})]` with
/// `Θ̃ = [M'_n, m_n - c̃] ∪ [m_n + c̃, M_n]`.
pub fn off_core_occupation(pot: &Potential, valley: &BasicValley, c_tilde: f64) -> Result<f64> {
    if !(c_tilde >= 0.0 && c_tilde.is_finite()) {
        return Err(Error::param("c_tilde", format!("{c_tilde} must be nonnegative")));
    }
    let reach = c_tilde.ceil() as i64;
    let m = valley.m_n;
    let profile = expected_local_time_profile(pot, m, valley.m_prime, valley.m_right)?;
    Ok(profile
        .iter()
        .filter(|(j, _)| *j <= m - reach || *j >= m + reach)
        .map(|(_, v)| v)
        .sum())
}

/// The three properties of a good environment and the measured occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodEnvReport {
    pub valley: Option<BasicValley>,
    pub valley_exists: bool,
    /// `|M'_n| ≤ W` and `M_n ≤ W`.
    pub window_ok: bool,
    pub expectation_ok: bool,
    pub expectation: Option<f64>,
    pub threshold: f64,
    pub window: i64,
}

impl GoodEnvReport {
    pub fn is_good(&self) -> bool {
        self.valley_exists && self.window_ok && self.expectation_ok
    }
}

pub fn is_good_environment(
    pot: &mut Potential,
    dist: &EnvDistribution,
    params: &GoodEnvParams,
) -> Result<GoodEnvReport> {
    params.validate()?;
    let sigma = dist.sigma();
    let window = window_bound(params.n, sigma);
    let threshold = params.threshold();
    let Some(valley) = basic_valley_for(pot, params.n, sigma)? else {
        return Ok(GoodEnvReport {
            valley: None,
            valley_exists: false,
            window_ok: false,
            expectation_ok: false,
            expectation: None,
            threshold,
            window,
        });
    };
    let expectation = off_core_occupation(pot, &valley, params.c_tilde())?;
    Ok(GoodEnvReport {
        valley: Some(valley),
        valley_exists: true,
        window_ok: valley.m_prime >= -window && valley.m_right <= window,
        expectation_ok: expectation <= threshold,
        expectation: Some(expectation),
        threshold,
        window,
    })
}

/// Both sides of the band bound on one flank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlankBound {
    /// `Σ e^{-(S_j - S_m)}` over the flank beyond distance `c̃`.
    pub sum: f64,
    /// `Σ_{i=1}^{N+1} e^{-a(i-1)} #{j : S_j - S_m ∈ [a(i-1), ai)}`.
    pub bound: f64,
    /// Sites with `S_j - S_m ≥ a(N+1)`, which no band covers.
    pub overflow: u64,
}

impl FlankBound {
    pub fn holds(&self) -> bool {
        self.sum <= self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceBound {
    pub right: FlankBound,
    pub left: FlankBound,
    /// `N = ⌊(Γ + Λ)/a⌋`
    pub bands: u64,
}

impl SliceBound {
    pub fn holds(&self) -> bool {
        self.right.holds() && self.left.holds()
    }
}

/// 1-based band of `v ≥ 0`: the `i` with `a(i-1) ≤ v < ai`.
fn band_of(v: f64, a: f64) -> u64 {
    let mut i = (v / a).floor().max(0.0) as u64 + 1;
    while a * (i as f64) <= v {
        i += 1;
    }
    while i > 1 && a * ((i - 1) as f64) > v {
        i -= 1;
    }
    i
}

pub fn slice_upper_bound(
    pot: &Potential,
    valley: &BasicValley,
    c_tilde: f64,
    a: f64,
    lambda: f64,
) -> Result<SliceBound> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", format!("{a} must be positive")));
    }
    if !(c_tilde >= 0.0 && c_tilde.is_finite()) {
        return Err(Error::param("c_tilde", format!("{c_tilde} must be nonnegative")));
    }
    let bands = ((valley.gamma + lambda) / a).floor().max(0.0) as u64;
    let m = valley.m_n;
    let sm = pot.try_s(m)?;
    pot.try_s(valley.m_prime)?;
    pot.try_s(valley.m_right)?;
    let reach = c_tilde.ceil() as i64;
    let top = bands + 1;
    let flank = |sites: &mut dyn Iterator<Item = i64>| {
        // the bound is accumulated site by site in the same order as the sum,
        // so termwise domination carries over to the rounded totals
        let mut sum = 0.0;
        let mut bound = 0.0;
        let mut overflow = 0;
        for j in sites {
            let v = pot.s(j) - sm;
            sum += (-v).exp();
            if v >= 0.0 {
                let i = band_of(v, a);
                if i <= top {
                    bound += (-a * (i - 1) as f64).exp();
                } else {
                    overflow += 1;
                }
            }
        }
        FlankBound {
            sum,
            bound,
            overflow,
        }
    };
    let right = flank(&mut ((m + reach)..=valley.m_right));
    let left = flank(&mut (valley.m_prime..=(m - reach)));
    Ok(SliceBound { right, left, bands })
}
