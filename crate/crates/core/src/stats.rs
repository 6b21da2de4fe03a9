//! Sample statistics for ensembles of independent runs.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the mean for independent samples.
pub fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::INFINITY;
    }
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Batch-means standard error: the series is cut into `batches` contiguous
/// blocks and the spread of the block means estimates the error of the
/// overall mean. Falls back to [`standard_error`] for short series.
pub fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let b = batches.max(2);
    if xs.len() < 2 * b {
        return standard_error(xs);
    }
    let size = xs.len() / b;
    let means: Vec<f64> = (0..b).map(|i| mean(&xs[i * size..(i + 1) * size])).collect();
    standard_error(&means)
}

/// Mean, unbiased variance and standard error of a set of values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            count: xs.len(),
            mean: mean(xs),
            variance: variance(xs),
            se: standard_error(xs),
        }
    }

    /// `|mean − target| ≤ k·se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Estimate of `E[X²]` and `E[X⁴]` from samples of `X`, with the standard
/// error of the second-moment estimate.
pub fn second_moment(xs: &[f64]) -> Estimate {
    let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    Estimate::of(&sq)
}

/// Difference of two independent estimates with its combined standard error.
pub fn combined_se(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}
