//! Keyword-targeted true-negative augmentation and baseline-vs-mitigated
//! comparison.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{
    AuditConfig, Corpus, GroupSet, KeywordSpec, SampleSource, ScoreMap, TextMatcher,
};
use crate::error::{AuditError, Result};
use crate::fairmetrics::{
    aggregate_metrics, group_seed, keyword_metrics, meta_metrics, pearson_r, AggregateMetrics,
    Bootstrap, Correlation, EvalSet, GroupMetric, KeywordMetrics, MetaMetricReport,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordQuota {
    pub keyword: String,
    /// Non-abusive training documents that already contain the keyword.
    pub existing_negatives: usize,
    pub requested: usize,
    /// Sampled pool ids, in pool order.
    pub sampled_ids: Vec<String>,
}

impl KeywordQuota {
    pub fn shortfall(&self) -> usize {
        self.requested - self.sampled_ids.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationPlan {
    pub per_keyword: Vec<KeywordQuota>,
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Serialize)]
struct PlanLine<'a> {
    id: &'a str,
    keywords: Vec<&'a str>,
}

impl MitigationPlan {
    pub fn requested_total(&self) -> usize {
        self.per_keyword.iter().map(|q| q.requested).sum()
    }

    /// Every sampled id once, ordered by first appearance across keywords.
    pub fn merged_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.per_keyword
            .iter()
            .flat_map(|q| q.sampled_ids.iter())
            .filter(|id| seen.insert(id.as_str()))
            .cloned()
            .collect()
    }

    /// The merged sample as documents, relabeled as mitigation samples in the
    /// training split. Gold labels are kept as annotated.
    pub fn merged_documents(&self, pool: &Corpus) -> Corpus {
        let wanted: HashSet<String> = self.merged_ids().into_iter().collect();
        let docs = pool
            .iter()
            .filter(|d| wanted.contains(&d.id))
            .map(|d| {
                let mut d = d.clone();
                d.sample_source = SampleSource::Mitigation;
                d.split = crate::corpus::Split::Train;
                d
            })
            .collect();
        Corpus::new(docs).expect("subset of a valid corpus")
    }

    /// One JSON line per merged id with the keywords whose quota it fills.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut by_id: HashMap<&str, Vec<&str>> = HashMap::new();
        for q in &self.per_keyword {
            for id in &q.sampled_ids {
                by_id
                    .entry(id.as_str())
                    .or_default()
                    .push(q.keyword.as_str());
            }
        }
        let mut out = String::new();
        for id in self.merged_ids() {
            let line = PlanLine {
                id: &id,
                keywords: by_id.remove(id.as_str()).unwrap_or_default(),
            };
            out.push_str(
                &serde_json::to_string(&line)
                    .map_err(|e| AuditError::Serialization(e.to_string()))?,
            );
            out.push('\n');
        }
        Ok(out)
    }
}

/// For each keyword, samples `floor(ratio · existing_negatives)` pool documents
/// that contain it. Short pools give up everything they have.
pub fn build_mitigation_sample(
    train: &Corpus,
    pool: &Corpus,
    keywords: &[KeywordSpec],
    ratio: f64,
    seed: u64,
) -> Result<MitigationPlan> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(AuditError::Config(format!(
            "mitigation ratio {ratio} must be non-negative"
        )));
    }
    let train_ids: HashSet<&str> = train.iter().map(|d| d.id.as_str()).collect();
    if let Some(d) = pool.iter().find(|d| train_ids.contains(d.id.as_str())) {
        return Err(AuditError::PoolOverlap(d.id.clone()));
    }
    let train_lower: Vec<String> = train
        .iter()
        .filter(|d| !d.gold_label.is_abusive())
        .map(|d| d.text.to_lowercase())
        .collect();
    let pool_lower: Vec<String> = pool.iter().map(|d| d.text.to_lowercase()).collect();

    let per_keyword = keywords
        .iter()
        .map(|kw| {
            let existing_negatives = train_lower.iter().filter(|t| kw.matches_lower(t)).count();
            let requested = (ratio * existing_negatives as f64 + 1e-9).floor() as usize;
            let candidates: Vec<usize> = pool_lower
                .iter()
                .enumerate()
                .filter(|(_, t)| kw.matches_lower(t))
                .map(|(i, _)| i)
                .collect();
            let take = requested.min(candidates.len());
            let mut rng = ChaCha8Rng::seed_from_u64(group_seed(seed, kw.name()));
            let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, candidates.len(), take)
                .into_iter()
                .map(|k| candidates[k])
                .collect();
            chosen.sort_unstable();
            KeywordQuota {
                keyword: kw.name().to_string(),
                existing_negatives,
                requested,
                sampled_ids: chosen
                    .into_iter()
                    .map(|i| pool.documents()[i].id.clone())
                    .collect(),
            }
        })
        .collect();
    Ok(MitigationPlan {
        per_keyword,
        ratio,
        seed,
    })
}

/// One group evaluated under both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordComparison {
    pub baseline: KeywordMetrics,
    pub mitigated: KeywordMetrics,
}

impl KeywordComparison {
    pub fn keyword(&self) -> &str {
        &self.baseline.keyword
    }

    /// Mitigated minus baseline point estimate.
    pub fn delta(&self, metric: GroupMetric) -> Option<f64> {
        Some(self.mitigated.value(metric)?.point - self.baseline.value(metric)?.point)
    }

    /// True when the two arms' intervals do not overlap.
    pub fn ci_disjoint(&self, metric: GroupMetric) -> Option<bool> {
        Some(
            self.mitigated
                .value(metric)?
                .disjoint_from(self.baseline.value(metric)?),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaComparison {
    pub metric: GroupMetric,
    pub baseline: MetaMetricReport,
    pub mitigated: MetaMetricReport,
}

impl MetaComparison {
    pub fn maxmin_delta(&self) -> f64 {
        self.mitigated.maxmin - self.baseline.maxmin
    }

    pub fn var_delta(&self) -> f64 {
        self.mitigated.var - self.baseline.var
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Keywords, then themes.
    pub groups: Vec<KeywordComparison>,
    /// Meta-metrics over the keywords defined in both arms. Metrics with fewer
    /// than two such keywords are absent.
    pub meta: Vec<MetaComparison>,
    pub aggregate_baseline: AggregateMetrics,
    pub aggregate_mitigated: AggregateMetrics,
}

/// Evaluates every group of `groups` under both score sets on the same test
/// corpus. Both arms use identical resamples, so identical scores give
/// identical reports.
pub fn compare_models(
    baseline: &ScoreMap,
    mitigated: &ScoreMap,
    test: &Corpus,
    groups: &GroupSet,
    config: &AuditConfig,
) -> Result<ComparisonReport> {
    let base_eval = EvalSet::with_scores(test, baseline, "baseline")?;
    let mit_eval = EvalSet::with_scores(test, mitigated, "mitigated")?;
    let boot = Bootstrap::new(config.bootstrap_samples, config.ci_level, config.rng_seed)
        .with_method(config.ci_method);

    let comparisons: Vec<KeywordComparison> = groups
        .groups()
        .into_iter()
        .map(|g| KeywordComparison {
            baseline: keyword_metrics(&base_eval, g, &boot),
            mitigated: keyword_metrics(&mit_eval, g, &boot),
        })
        .collect();

    let keyword_rows = &comparisons[..groups.keywords.len()];
    let mut meta = Vec::new();
    for metric in GroupMetric::ALL {
        let (b, m): (Vec<_>, Vec<_>) = keyword_rows
            .iter()
            .filter_map(|c| Some((*c.baseline.value(metric)?, *c.mitigated.value(metric)?)))
            .unzip();
        if b.len() >= 2 {
            meta.push(MetaComparison {
                metric,
                baseline: meta_metrics(metric, &b)?,
                mitigated: meta_metrics(metric, &m)?,
            });
        }
    }

    let agg_boot = Bootstrap::new(
        config.aggregate_bootstrap_samples,
        config.ci_level,
        config.rng_seed,
    );
    Ok(ComparisonReport {
        groups: comparisons,
        meta,
        aggregate_baseline: aggregate_metrics(&base_eval, &agg_boot)?,
        aggregate_mitigated: aggregate_metrics(&mit_eval, &agg_boot)?,
    })
}

/// Which subgroup count a correlation row uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountKind {
    Total,
    Positive,
    Negative,
}

impl CountKind {
    pub const ALL: [CountKind; 3] = [CountKind::Total, CountKind::Positive, CountKind::Negative];

    pub fn name(self) -> &'static str {
        match self {
            CountKind::Total => "n_subgroup",
            CountKind::Positive => "n_subgroup_abusive",
            CountKind::Negative => "n_subgroup_non_abusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub x: String,
    pub y: String,
    pub n: usize,
    /// `Err` holds the reason the correlation is undefined.
    pub result: std::result::Result<Correlation, String>,
}

/// Pearson correlation between each group's bootstrap standard error for
/// `metric` and its subgroup counts in the evaluation set.
pub fn ci_width_correlation(
    report: &[KeywordMetrics],
    metric: GroupMetric,
    permutations: usize,
    seed: u64,
) -> Vec<CorrelationRow> {
    let defined: Vec<(&KeywordMetrics, f64)> = report
        .iter()
        .filter_map(|k| Some((k, k.value(metric)?.std_error)))
        .collect();
    let se: Vec<f64> = defined.iter().map(|d| d.1).collect();
    CountKind::ALL
        .into_iter()
        .map(|kind| {
            let counts: Vec<f64> = defined
                .iter()
                .map(|(k, _)| match kind {
                    CountKind::Total => k.counts.total,
                    CountKind::Positive => k.counts.positive,
                    CountKind::Negative => k.counts.negative,
                } as f64)
                .collect();
            CorrelationRow {
                x: format!("{}_se", metric.name()),
                y: kind.name().to_string(),
                n: se.len(),
                result: pearson_r(&se, &counts, permutations, seed)
                    .map_err(|e| format!("undefined r: {e}")),
            }
        })
        .collect()
}

/// Correlation of the two arms' standard errors over groups defined in both.
pub fn se_agreement(
    comparisons: &[KeywordComparison],
    metric: GroupMetric,
    permutations: usize,
    seed: u64,
) -> CorrelationRow {
    let (b, m): (Vec<f64>, Vec<f64>) = comparisons
        .iter()
        .filter_map(|c| {
            Some((
                c.baseline.value(metric)?.std_error,
                c.mitigated.value(metric)?.std_error,
            ))
        })
        .unzip();
    CorrelationRow {
        x: format!("baseline_{}_se", metric.name()),
        y: format!("mitigated_{}_se", metric.name()),
        n: b.len(),
        result: pearson_r(&b, &m, permutations, seed).map_err(|e| format!("undefined r: {e}")),
    }
}
