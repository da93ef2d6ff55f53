//! Small statistics helpers for reports.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A proportion or mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl Estimate {
    pub fn proportion(hits: u64, samples: u64) -> Self {
        let p = hits as f64 / samples as f64;
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        }
    }

    /// Sample mean; the standard error is NaN below two samples.
    pub fn mean_of(xs: &[f64]) -> Self {
        let n = xs.len();
        let value = mean(xs);
        let std_err = if n > 1 {
            (variance(xs) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Estimate {
            value,
            std_err,
            samples: n as u64,
        }
    }

    /// `value ≤ bound + 3 s.e.`
    pub fn within(&self, bound: f64) -> bool {
        self.value <= bound + 3.0 * self.std_err
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Median (average of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] * (1.0 - frac) + v[i + 1] * frac
    } else {
        v[i]
    }
}

/// Least-squares slope and intercept of `y` on `x`; `None` when `x` is constant.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Percentile bootstrap interval of `stat` over resampled rows.
pub fn bootstrap_ci<T, F>(rows: &[T], resamples: usize, level: f64, seed: u64, stat: F) -> Option<(f64, f64)>
where
    F: Fn(&[&T]) -> Option<f64>,
{
    if rows.is_empty() || resamples == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    let mut pick = Vec::with_capacity(rows.len());
    for _ in 0..resamples {
        pick.clear();
        for _ in 0..rows.len() {
            pick.push(&rows[rng.random_range(0..rows.len())]);
        }
        if let Some(v) = stat(&pick) {
            if v.is_finite() {
                values.push(v);
            }
        }
    }
    if values.is_empty() {
        return None;
    }
    let tail = (1.0 - level) / 2.0;
    Some((quantile(&values, tail), quantile(&values, 1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&xs), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        let (s, c) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        let p = Estimate::proportion(25, 100);
        assert_eq!(p.value, 0.25);
        assert!((p.std_err - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(Estimate::mean_of(&[1.0]).std_err.is_nan());
    }

    #[test]
    fn bootstrap_brackets_the_mean() {
        let rows: Vec<f64> = (0..200).map(|i| (i % 10) as f64).collect();
        let (lo, hi) = bootstrap_ci(&rows, 500, 0.95, 3, |r| {
            Some(r.iter().map(|x| **x).sum::<f64>() / r.len() as f64)
        })
        .unwrap();
        assert!(lo < 4.5 && 4.5 < hi);
    }
}
