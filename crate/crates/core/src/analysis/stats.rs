//! Streaming moment accumulators and per-time trajectory statistics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Multiplier for the 95% Normal-approximation confidence half-width.
pub const Z_95: f64 = 1.96;

/// Count, mean and centred sum of squares (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / n as f64;
        self.mean += delta * w;
        self.m2 += other.m2 + delta * delta * self.count as f64 * w;
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// `1.96 · sd / √n`.
    pub fn ci_halfwidth(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        Z_95 * (self.variance() / self.count as f64).sqrt()
    }
}

/// Statistics of `N(t)` and `log N(t)` across replicates at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStats {
    pub t: usize,
    #[serde(rename = "mean_N")]
    pub mean_n: f64,
    #[serde(rename = "var_N")]
    pub var_n: f64,
    #[serde(rename = "mean_logN")]
    pub mean_log_n: f64,
    #[serde(rename = "var_logN")]
    pub var_log_n: f64,
    #[serde(rename = "ci_halfwidth_N")]
    pub ci_halfwidth_n: f64,
    #[serde(rename = "ci_halfwidth_logN")]
    pub ci_halfwidth_log_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub replicates: u64,
    /// One entry per `t = 0..=T`.
    pub times: Vec<TimeStats>,
}

impl TrajectoryStats {
    pub fn horizon(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn at(&self, t: usize) -> &TimeStats {
        &self.times[t]
    }

    pub fn last(&self) -> &TimeStats {
        self.times.last().expect("stats cover at least t = 0")
    }

    pub const CSV_HEADER: &'static str = "t,mean_N,var_N,mean_logN,var_logN,ci_halfwidth_N,ci_halfwidth_logN";

    /// One row per `t`, shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.times {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.t, s.mean_n, s.var_n, s.mean_log_n, s.var_log_n, s.ci_halfwidth_n, s.ci_halfwidth_log_n
            );
        }
        out
    }
}

/// Per-time accumulators over a set of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    size: Vec<Moments>,
    log_size: Vec<Moments>,
}

impl EnsembleAccumulator {
    pub fn new(horizon: usize) -> Self {
        Self { size: vec![Moments::new(); horizon + 1], log_size: vec![Moments::new(); horizon + 1] }
    }

    pub fn horizon(&self) -> usize {
        self.size.len() - 1
    }

    pub fn replicates(&self) -> u64 {
        self.size[0].count()
    }

    /// Adds one trajectory given `log N(t)` for `t = 0..=T`.
    pub fn push_log_sizes(&mut self, log_sizes: &[f64]) {
        debug_assert_eq!(log_sizes.len(), self.size.len());
        for ((s, l), &x) in self.size.iter_mut().zip(&mut self.log_size).zip(log_sizes) {
            s.push(x.exp());
            l.push(x);
        }
    }

    /// Folds in accumulators built from other replicates. Merging the same
    /// pieces in the same order always gives the same bits.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.size.len(), other.size.len(), "horizons differ");
        for (a, b) in self.size.iter_mut().zip(&other.size) {
            a.merge(b);
        }
        for (a, b) in self.log_size.iter_mut().zip(&other.log_size) {
            a.merge(b);
        }
    }

    pub fn finish(&self) -> TrajectoryStats {
        let times = self
            .size
            .iter()
            .zip(&self.log_size)
            .enumerate()
            .map(|(t, (s, l))| TimeStats {
                t,
                mean_n: s.mean(),
                var_n: s.variance(),
                mean_log_n: l.mean(),
                var_log_n: l.variance(),
                ci_halfwidth_n: s.ci_halfwidth(),
                ci_halfwidth_log_n: l.ci_halfwidth(),
            })
            .collect();
        TrajectoryStats { replicates: self.replicates(), times }
    }
}
