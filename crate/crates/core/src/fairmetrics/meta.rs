use super::{GroupMetric, MetricValue};
use crate::error::{AuditError, Result};

/// Cross-group disparity of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaMetricReport {
    pub metric: GroupMetric,
    /// Largest minus smallest group point estimate.
    pub maxmin: f64,
    /// Across-group standard deviation after removing the mean bootstrap
    /// variance of the individual groups, floored at zero.
    pub var: f64,
    pub groups: usize,
}

/// `maxmin = max − min` of the points; `var = sqrt(max(0, S² − mean(se²)))`
/// with `S²` the sample variance of the points.
pub fn meta_metrics(metric: GroupMetric, per_group: &[MetricValue]) -> Result<MetaMetricReport> {
    let k = per_group.len();
    if k < 2 {
        return Err(AuditError::TooFewGroups(k));
    }
    let points: Vec<f64> = per_group.iter().map(|v| v.point).collect();
    let max = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = points.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = points.iter().sum::<f64>() / k as f64;
    let spread = points.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let noise = per_group.iter().map(|v| v.std_error.powi(2)).sum::<f64>() / k as f64;
    Ok(MetaMetricReport {
        metric,
        maxmin: max - min,
        var: (spread - noise).max(0.0).sqrt(),
        groups: k,
    })
}
