use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-pass accumulator of the first four central moments plus the raw
/// second moment, mergeable across partitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
    sum_sq: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
        self.sum_sq += x * x;
    }

    /// Combines two disjoint partitions.
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Moments {
            n: self.n + other.n,
            mean: self.mean + delta * nb / n,
            m2,
            m3,
            m4,
            sum_sq: self.sum_sq + other.sum_sq,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Mean of the squared values.
    pub fn mean_square(&self) -> f64 {
        self.sum_sq / self.n as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        self.m2 / self.n as f64
    }

    /// `m3 / m2^(3/2)` and `m4 / m2^2 - 3`, or `None` for a degenerate sample.
    pub fn shape(&self) -> Option<(f64, f64)> {
        let n = self.n as f64;
        let var = self.m2 / n;
        if self.n < 2 || var.is_nan() || var <= 0.0 {
            return None;
        }
        let skew = (self.m3 / n) / var.powf(1.5);
        let kurt = (self.m4 / n) / (var * var) - 3.0;
        Some((skew, kurt))
    }
}

/// Sample skewness and excess kurtosis (population moment ratios).
pub fn normality_stats(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 8 {
        return Err(Error::DegenerateSample(format!(
            "need at least 8 samples, got {}",
            samples.len()
        )));
    }
    let mut m = Moments::new();
    samples.iter().for_each(|&x| m.push(x));
    m.shape()
        .ok_or_else(|| Error::DegenerateSample("sample variance is zero".into()))
}
