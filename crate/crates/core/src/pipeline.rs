//! End-to-end orchestration of the keyword discovery and measurement stages.

use crate::corpus::{AuditConfig, Corpus, GroupSet, QuadrantCounts};
use crate::error::Result;
use crate::fairmetrics::{
    keyword_metrics, meta_metrics, Bootstrap, EvalSet, GroupMetric, KeywordMetrics,
    MetaMetricReport,
};
use crate::linmodel::{
    label_fp_targets, top_fp_keywords, train_fp_model, LinearFPModel, RankDirection, RankedKeyword,
    TrainConfig,
};
use crate::textvec::{VectorizerConfig, VectorizerModel};

impl AuditConfig {
    pub fn vectorizer_config(&self) -> VectorizerConfig {
        let cfg = VectorizerConfig::new(self.max_df, self.min_df);
        match &self.stopwords {
            Some(words) => cfg.with_stopwords(words.iter().cloned()),
            None => cfg,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            l2_lambda: self.l2_lambda,
            class_reweight: self.class_reweight,
            seed: self.rng_seed,
            ..TrainConfig::default()
        }
    }

    pub fn bootstrap(&self) -> Bootstrap {
        Bootstrap::new(self.bootstrap_samples, self.ci_level, self.rng_seed)
            .with_method(self.ci_method)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discovery {
    pub counts: QuadrantCounts,
    pub vectorizer: VectorizerModel,
    pub model: LinearFPModel,
    /// At most `top_k` entries; fewer when the vocabulary is smaller.
    pub keywords: Vec<RankedKeyword>,
}

/// Quadrant labeling, tf-idf fit, FP-discriminant training and coefficient
/// ranking over a scored, labeled corpus.
pub fn discover(corpus: &Corpus, config: &AuditConfig) -> Result<Discovery> {
    config.validate()?;
    let counts = corpus.quadrant_counts(config.threshold)?;
    let targets = label_fp_targets(corpus, config.threshold)?;
    let vectorizer = VectorizerModel::fit_corpus(corpus, config.vectorizer_config())?;
    let rows = vectorizer.transform_corpus(corpus);
    let model = train_fp_model(&rows, &targets, vectorizer.len(), &config.train_config())?;
    let direction = if config.report_negative {
        RankDirection::Negative
    } else {
        RankDirection::FalsePositive
    };
    let k = config.top_k.min(vectorizer.len());
    let keywords = top_fp_keywords(&model, &vectorizer, k, direction)?;
    Ok(Discovery {
        counts,
        vectorizer,
        model,
        keywords,
    })
}

/// Per-group metrics with intervals, keywords first and then themes.
pub fn metrics_report(
    eval: &EvalSet,
    groups: &GroupSet,
    config: &AuditConfig,
) -> Vec<KeywordMetrics> {
    let boot = config.bootstrap();
    groups
        .groups()
        .into_iter()
        .map(|g| keyword_metrics(eval, g, &boot))
        .collect()
}

/// Meta-metrics per metric over the groups where that metric is defined.
pub fn meta_report(rows: &[KeywordMetrics]) -> Vec<(GroupMetric, Result<MetaMetricReport>)> {
    GroupMetric::ALL
        .into_iter()
        .map(|m| {
            let values: Vec<_> = rows.iter().filter_map(|r| r.value(m).copied()).collect();
            (m, meta_metrics(m, &values))
        })
        .collect()
}
