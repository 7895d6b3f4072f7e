//! Binomial confidence intervals and small summary helpers.

use serde::{Deserialize, Serialize};

/// Two-sided 99% standard-normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { low: x, high: x }
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> Interval {
    assert!(trials > 0, "wilson interval needs at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()) / denom;
    let mut low = (centre - half).max(0.0);
    let mut high = (centre + half).min(1.0);
    // The score interval always contains 0 (resp. 1) when no (resp. all) trials succeed.
    if successes == 0 {
        low = 0.0;
    }
    if successes == trials {
        high = 1.0;
    }
    Interval { low, high }
}

pub fn wilson99(successes: u64, trials: u64) -> Interval {
    wilson(successes, trials, Z_99)
}

/// Standard deviation of a binomial frequency with success probability `p` over `trials`.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p.clamp(0.0, 1.0) * (1.0 - p.clamp(0.0, 1.0)) / trials as f64).sqrt()
}

/// Sample mean with a normal-approximation 99% interval.
pub fn mean_interval(values: &[f64]) -> (f64, Interval) {
    assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, Interval::point(mean));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_99 * (var / n).sqrt();
    (mean, Interval { low: mean - half, high: mean + half })
}
