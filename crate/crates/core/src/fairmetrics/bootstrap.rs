use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::CiMethod;
use crate::error::{AuditError, Result};

/// Largest tolerated share of resamples on which the statistic is undefined.
pub const MAX_DEGENERATE_SHARE: f64 = 0.2;

/// Resampling plan. Resample `b` draws from its own ChaCha stream `b` under
/// `seed`, so the index sets depend only on `(seed, b, n)` and results do not
/// depend on how many threads evaluate them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bootstrap {
    pub samples: usize,
    pub level: f64,
    pub seed: u64,
    pub method: CiMethod,
}

/// Summary of a bootstrap distribution around a point estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub point: f64,
    pub low: f64,
    pub high: f64,
    /// Sample standard deviation of the valid resample statistics.
    pub std_error: f64,
    pub mean: f64,
    pub valid: usize,
    pub discarded: usize,
}

impl Bootstrap {
    pub fn new(samples: usize, level: f64, seed: u64) -> Self {
        Self {
            samples,
            level,
            seed,
            method: CiMethod::Empirical,
        }
    }

    pub fn with_method(mut self, method: CiMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn rng(&self, b: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(b as u64);
        rng
    }

    /// Indices of resample `b` over a population of `n` items.
    pub fn resample_indices(&self, n: usize, b: usize) -> Vec<usize> {
        let mut rng = self.rng(b);
        (0..n).map(|_| rng.random_range(0..n)).collect()
    }

    /// Multiplicity of each item in resample `b`.
    pub fn resample_counts(&self, n: usize, b: usize) -> Vec<u32> {
        let mut rng = self.rng(b);
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
        counts
    }

    /// Evaluates `f` on every resample's multiplicity vector, in resample order.
    pub fn replicate_counts<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[u32]) -> T + Sync,
    {
        (0..self.samples)
            .into_par_iter()
            .map(|b| f(&self.resample_counts(n, b)))
            .collect()
    }

    /// Evaluates `f` on every resample's index list, in resample order.
    pub fn replicate<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[usize]) -> T + Sync,
    {
        (0..self.samples)
            .into_par_iter()
            .map(|b| f(&self.resample_indices(n, b)))
            .collect()
    }

    /// Point estimate on the full sample plus an interval from the resamples.
    /// `f` returns `None` where the statistic is undefined.
    pub fn ci<F>(&self, n: usize, f: F, bounds: Option<(f64, f64)>) -> Result<Interval>
    where
        F: Fn(&[usize]) -> Option<f64> + Sync,
    {
        let identity: Vec<usize> = (0..n).collect();
        let point = f(&identity).ok_or(AuditError::UndefinedStatistic)?;
        let stats = self.replicate(n, &f);
        self.interval(point, &stats, bounds)
    }

    /// Builds the interval for `point` from per-resample statistics.
    ///
    /// The empirical interval reflects the bootstrap quantiles about the point
    /// estimate. After clamping to `bounds`, the interval is widened if needed
    /// so it always contains the point estimate.
    pub fn interval(
        &self,
        point: f64,
        stats: &[Option<f64>],
        bounds: Option<(f64, f64)>,
    ) -> Result<Interval> {
        let mut valid: Vec<f64> = stats.iter().flatten().copied().collect();
        let discarded = stats.len() - valid.len();
        if valid.is_empty() || discarded as f64 > MAX_DEGENERATE_SHARE * stats.len() as f64 {
            return Err(AuditError::TooManyDegenerate {
                discarded,
                total: stats.len(),
            });
        }
        valid.sort_unstable_by(f64::total_cmp);
        let alpha = 1.0 - self.level;
        let q_lo = quantile_sorted(&valid, alpha / 2.0);
        let q_hi = quantile_sorted(&valid, 1.0 - alpha / 2.0);
        let (mut low, mut high) = match self.method {
            CiMethod::Empirical => (2.0 * point - q_hi, 2.0 * point - q_lo),
            CiMethod::Percentile => (q_lo, q_hi),
        };
        if let Some((lo_b, hi_b)) = bounds {
            low = low.clamp(lo_b, hi_b);
            high = high.clamp(lo_b, hi_b);
        }
        low = low.min(point);
        high = high.max(point);
        let (mean, std_error) = mean_sd(&valid);
        Ok(Interval {
            point,
            low,
            high,
            std_error,
            mean,
            valid: valid.len(),
            discarded,
        })
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean and sample (n − 1) standard deviation; the deviation is 0 for one value.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}
