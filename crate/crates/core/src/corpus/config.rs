use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// Bootstrap interval construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Reverse percentile: `[2θ̂ − q_hi, 2θ̂ − q_lo]`.
    #[default]
    Empirical,
    /// Plain percentile: `[q_lo, q_hi]`.
    Percentile,
}

/// Every tunable of an audit run. Missing TOML keys fall back to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Scores strictly above this are predicted abusive.
    pub threshold: f64,
    pub max_df: f64,
    pub min_df: f64,
    pub top_k: usize,
    pub bootstrap_samples: usize,
    pub ci_level: f64,
    pub mitigation_ratio: f64,
    pub rng_seed: u64,
    pub l2_lambda: f64,
    /// Weight FP examples by the inverse class frequency when training.
    pub class_reweight: bool,
    /// Rank the most negative coefficients instead of the most positive.
    pub report_negative: bool,
    pub ci_method: CiMethod,
    /// Resamples behind the aggregate PR/ROC AUC mean and standard deviation.
    pub aggregate_bootstrap_samples: usize,
    pub permutations: usize,
    /// Replaces the built-in English stopword list when set.
    pub stopwords: Option<Vec<String>>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            max_df: 0.05,
            min_df: 0.0002,
            top_k: 350,
            bootstrap_samples: 1000,
            ci_level: 0.95,
            mitigation_ratio: 0.5,
            rng_seed: 0,
            l2_lambda: 1e-4,
            class_reweight: false,
            report_negative: false,
            ci_method: CiMethod::Empirical,
            aggregate_bootstrap_samples: 100,
            permutations: 10_000,
            stopwords: None,
        }
    }
}

impl AuditConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| AuditError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AuditError::Config(msg));
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold {} must lie in (0, 1)", self.threshold));
        }
        if !(self.max_df > 0.0 && self.max_df <= 1.0) {
            return bad(format!("max_df {} must lie in (0, 1]", self.max_df));
        }
        if !(self.min_df >= 0.0 && self.min_df < 1.0) {
            return bad(format!("min_df {} must lie in [0, 1)", self.min_df));
        }
        if self.min_df >= self.max_df {
            return bad(format!(
                "min_df {} must be below max_df {}",
                self.min_df, self.max_df
            ));
        }
        if self.top_k == 0 {
            return bad("top_k must be positive".into());
        }
        if self.bootstrap_samples < 100 {
            return bad(format!(
                "bootstrap_samples {} is below the minimum of 100",
                self.bootstrap_samples
            ));
        }
        if self.aggregate_bootstrap_samples < 2 {
            return bad("aggregate_bootstrap_samples must be at least 2".into());
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level {} must lie in (0, 1)", self.ci_level));
        }
        if !(self.mitigation_ratio >= 0.0 && self.mitigation_ratio.is_finite()) {
            return bad(format!(
                "mitigation_ratio {} must be non-negative",
                self.mitigation_ratio
            ));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return bad(format!("l2_lambda {} must be non-negative", self.l2_lambda));
        }
        if self.permutations == 0 {
            return bad("permutations must be positive".into());
        }
        Ok(())
    }

    /// One-line `key=value` summary for report headers.
    pub fn describe(&self) -> String {
        format!(
            "threshold={} max_df={} min_df={} top_k={} bootstrap_samples={} ci_level={} \
             ci_method={} mitigation_ratio={} l2_lambda={} seed={}",
            self.threshold,
            self.max_df,
            self.min_df,
            self.top_k,
            self.bootstrap_samples,
            self.ci_level,
            match self.ci_method {
                CiMethod::Empirical => "empirical",
                CiMethod::Percentile => "percentile",
            },
            self.mitigation_ratio,
            self.l2_lambda,
            self.rng_seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = AuditConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.max_df, 0.05);
        assert_eq!(cfg.min_df, 0.0002);
        assert_eq!(cfg.top_k, 350);
        assert_eq!(cfg.bootstrap_samples, 1000);
        assert_eq!(cfg.ci_level, 0.95);
        assert_eq!(cfg.mitigation_ratio, 0.5);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg =
            AuditConfig::from_toml("threshold = 0.7\nrng_seed = 9\nci_method = \"percentile\"\n")
                .unwrap();
        assert_eq!(cfg.threshold, 0.7);
        assert_eq!(cfg.rng_seed, 9);
        assert_eq!(cfg.ci_method, CiMethod::Percentile);
        assert_eq!(cfg.top_k, 350);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "threshold = 1.0",
            "min_df = 0.1\nmax_df = 0.05",
            "bootstrap_samples = 10",
            "ci_level = 1.5",
            "unknown_key = 3",
            "top_k = 0",
        ] {
            assert!(AuditConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn describe_lists_core_values() {
        let d = AuditConfig::default().describe();
        assert!(d.contains("max_df=0.05"));
        assert!(d.contains("min_df=0.0002"));
        assert!(d.contains("top_k=350"));
    }
}
