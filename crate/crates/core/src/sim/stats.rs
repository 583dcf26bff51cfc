//! Streaming moments, quantiles and histograms.

use serde::{Deserialize, Serialize};

/// Running count, mean and sum of squared deviations (Welford), mergeable
/// with Chan's pairwise update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges, `counts.len() + 1` entries.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub n_samples: u64,
    pub mean: f64,
    pub std_dev: f64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins >= 1 && hi > lo);
        let width = (hi - lo) / bins as f64;
        Self {
            edges: (0..=bins).map(|k| lo + k as f64 * width).collect(),
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
            n_samples: 0,
            mean: 0.0,
            std_dev: 0.0,
        }
    }

    pub fn fill(&mut self, samples: impl IntoIterator<Item = f64>) {
        let lo = self.edges[0];
        let hi = *self.edges.last().unwrap();
        let bins = self.counts.len();
        let width = (hi - lo) / bins as f64;
        let mut m = Moments::default();
        for x in samples {
            m.push(x);
            if x < lo {
                self.underflow += 1;
            } else if x >= hi {
                self.overflow += 1;
            } else {
                let k = (((x - lo) / width) as usize).min(bins - 1);
                self.counts[k] += 1;
            }
        }
        self.n_samples = m.n;
        self.mean = m.mean;
        self.std_dev = m.variance().sqrt();
    }

    /// Index of the bin containing `x`, if in range.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        self.edges.windows(2).position(|e| e[0] <= x && x < e[1])
    }
}
