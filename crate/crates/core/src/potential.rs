//! Dense, lazily extended view of an environment and its potential.
//!
//! Convention: `S_0 = 0` and `S_k - S_{k-1} = ε_k` for every `k ∈ ℤ`, so
//! `S_{-1} = -ε_0`. Values are accumulated outward from 0, which makes every
//! `S_k` independent of how and in which order the window was grown.

use crate::env::{epsilon_of, Environment};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Potential {
    source: Option<Environment>,
    lo: i64,
    alpha: Vec<f64>,
    eps: Vec<f64>,
    s: Vec<f64>,
}

impl Potential {
    /// Realizes `[min(lo, 0), max(hi, 0)]` of `env`.
    pub fn from_env(env: Environment, lo: i64, hi: i64) -> Result<Self> {
        let alpha = vec![env.alpha(0)];
        let mut p = Potential {
            source: Some(env),
            lo: 0,
            eps: vec![epsilon_of(alpha[0])],
            alpha,
            s: vec![0.0],
        };
        p.grow_to(lo.min(0), hi.max(0));
        Ok(p)
    }

    /// Fixed potential over explicit site probabilities `alphas[k - lo]`.
    /// The window must contain 0.
    pub fn from_alphas(lo: i64, alphas: Vec<f64>) -> Result<Self> {
        let hi = lo + alphas.len() as i64 - 1;
        if !(lo <= 0 && 0 <= hi) {
            return Err(Error::param("lo", format!("window [{lo}, {hi}] must contain 0")));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::param("alphas", format!("{a} not in (0, 1)")));
        }
        let eps: Vec<f64> = alphas.iter().map(|a| epsilon_of(*a)).collect();
        let zero = (-lo) as usize;
        let mut s = vec![0.0; alphas.len()];
        for k in zero + 1..s.len() {
            s[k] = s[k - 1] + eps[k];
        }
        for k in (0..zero).rev() {
            s[k] = s[k + 1] - eps[k + 1];
        }
        Ok(Potential {
            source: None,
            lo,
            alpha: alphas,
            eps,
            s,
        })
    }

    /// Fixed potential with hand-made values `values[k - lo] = S_k` (any
    /// additive offset). Site probabilities are recovered from the increments,
    /// `α_k = 1 / (1 + e^{S_k - S_{k-1}})`; the leftmost site gets `α = 1/2`.
    pub fn from_values(lo: i64, values: Vec<f64>) -> Self {
        let mut eps = vec![0.0; values.len()];
        for k in 1..values.len() {
            eps[k] = values[k] - values[k - 1];
        }
        let alpha = eps.iter().map(|e| 1.0 / (1.0 + e.exp())).collect();
        Potential {
            source: None,
            lo,
            alpha,
            eps,
            s: values,
        }
    }

    /// Constant environment `α_i ≡ alpha` on `[lo, hi]` (test and demo helper).
    pub fn constant(alpha: f64, lo: i64, hi: i64) -> Result<Self> {
        Self::from_alphas(lo, vec![alpha; (hi - lo + 1).max(0) as usize])
    }

    pub fn environment(&self) -> Option<&Environment> {
        self.source.as_ref()
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.s.len() as i64 - 1
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.lo && k <= self.hi()
    }

    pub fn is_extendable(&self) -> bool {
        self.source.is_some()
    }

    #[inline]
    fn idx(&self, k: i64) -> usize {
        debug_assert!(self.contains(k), "site {k} outside [{}, {}]", self.lo, self.hi());
        (k - self.lo) as usize
    }

    /// `S_k`; `k` must be inside the realized window.
    #[inline]
    pub fn s(&self, k: i64) -> f64 {
        self.s[self.idx(k)]
    }

    #[inline]
    pub fn alpha(&self, k: i64) -> f64 {
        self.alpha[self.idx(k)]
    }

    /// `β_k = 1 - α_k`.
    #[inline]
    pub fn beta(&self, k: i64) -> f64 {
        1.0 - self.alpha(k)
    }

    #[inline]
    pub fn epsilon(&self, k: i64) -> f64 {
        self.eps[self.idx(k)]
    }

    pub fn try_s(&self, k: i64) -> Result<f64> {
        self.check(k)?;
        Ok(self.s(k))
    }

    fn check(&self, k: i64) -> Result<()> {
        if self.contains(k) {
            Ok(())
        } else {
            Err(Error::OutsideWindow {
                site: k,
                lo: self.lo,
                hi: self.hi(),
            })
        }
    }

    /// Makes `[lo, hi]` available, growing geometrically when backed by an
    /// environment. Fixed potentials fail if the range is not already covered.
    pub fn ensure(&mut self, lo: i64, hi: i64) -> Result<()> {
        if lo >= self.lo && hi <= self.hi() {
            return Ok(());
        }
        if self.source.is_none() {
            self.check(lo)?;
            return self.check(hi);
        }
        let width = self.s.len() as i64;
        let new_lo = if lo < self.lo { lo.min(self.lo - width) } else { self.lo };
        let new_hi = if hi > self.hi() { hi.max(self.hi() + width) } else { self.hi() };
        self.grow_to(new_lo, new_hi);
        Ok(())
    }

    /// Grows to exactly cover `[lo, hi]` (no geometric slack).
    fn grow_to(&mut self, lo: i64, hi: i64) {
        let env = self.source.as_ref().expect("growing a fixed potential");
        let cur_hi = self.hi();
        if hi > cur_hi {
            let start = self.alpha.len();
            env.fill_alphas(cur_hi + 1, hi, &mut self.alpha);
            for k in start..self.alpha.len() {
                let e = epsilon_of(self.alpha[k]);
                self.eps.push(e);
                let prev = self.s[k - 1];
                self.s.push(prev + e);
            }
        }
        if lo < self.lo {
            let front = env.alphas(lo, self.lo - 1);
            let n = front.len();
            let front_eps: Vec<f64> = front.iter().map(|a| epsilon_of(*a)).collect();
            let mut front_s = vec![0.0; n];
            // S_k = S_{k+1} - ε_{k+1}
            let mut next_s = self.s[0];
            let mut next_eps = self.eps[0];
            for j in (0..n).rev() {
                front_s[j] = next_s - next_eps;
                next_s = front_s[j];
                next_eps = front_eps[j];
            }
            self.alpha.splice(0..0, front);
            self.eps.splice(0..0, front_eps);
            self.s.splice(0..0, front_s);
            self.lo = lo;
        }
    }

    /// `S_k` for `k in lo..=hi`, extending the window if possible.
    pub fn range(&mut self, lo: i64, hi: i64) -> Result<&[f64]> {
        if hi < lo {
            return Ok(&[]);
        }
        self.ensure(lo, hi)?;
        let a = self.idx(lo);
        let b = self.idx(hi);
        Ok(&self.s[a..=b])
    }

    /// Realized values `S_k` over the whole window, leftmost first.
    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alpha
    }
}

/// `S_k` for `k in lo..=hi` of the environment `(dist, seed)`.
pub fn potential_range(env: &Environment, lo: i64, hi: i64) -> Result<Vec<f64>> {
    let mut p = Potential::from_env(env.clone(), lo, hi)?;
    Ok(p.range(lo, hi)?.to_vec())
}
