//! AUC-family subgroup bias metrics with bootstrap intervals, meta-metrics
//! across groups, aggregate PR/ROC AUC, and correlation diagnostics.
//!
//! For a subgroup `S` (documents matching a keyword) and background `B`:
//!
//! * subgroup AUC compares positives of `S` with negatives of `S`;
//! * BPSN AUC compares positives of `B` with negatives of `S`, and is low when
//!   benign subgroup content outscores genuinely abusive background content;
//! * BNSP AUC compares positives of `S` with negatives of `B`.
//!
//! Resampling draws whole documents from the evaluation set and recomputes
//! subgroup membership for every resample.

mod auc;
mod bootstrap;
mod correlation;
mod meta;

use std::cmp::Ordering;
use std::fmt;

use crate::corpus::{Corpus, ScoreMap, TextMatcher};
use crate::error::{AuditError, Result, Side};

pub use auc::{auc, pr_auc, roc_auc};
pub use bootstrap::{mean_sd, quantile_sorted, Bootstrap, Interval, MAX_DEGENERATE_SHARE};
pub use correlation::{pearson_r, Correlation};
pub use meta::{meta_metrics, MetaMetricReport};

/// The three per-group AUC metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupMetric {
    SubgroupAuc,
    BpsnAuc,
    BnspAuc,
}

impl GroupMetric {
    pub const ALL: [GroupMetric; 3] = [
        GroupMetric::SubgroupAuc,
        GroupMetric::BpsnAuc,
        GroupMetric::BnspAuc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GroupMetric::SubgroupAuc => "subgroup_auc",
            GroupMetric::BpsnAuc => "bpsn_auc",
            GroupMetric::BnspAuc => "bnsp_auc",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Which (cell) supplies the positive and negative sides.
    fn sides(self) -> (Cell, Cell) {
        match self {
            GroupMetric::SubgroupAuc => (Cell::SubgroupPos, Cell::SubgroupNeg),
            GroupMetric::BpsnAuc => (Cell::BackgroundPos, Cell::SubgroupNeg),
            GroupMetric::BnspAuc => (Cell::SubgroupPos, Cell::BackgroundNeg),
        }
    }
}

impl fmt::Display for GroupMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GroupMetric {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        GroupMetric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
enum Cell {
    SubgroupPos = 0,
    SubgroupNeg = 1,
    BackgroundPos = 2,
    BackgroundNeg = 3,
}

impl Cell {
    fn of(member: bool, abusive: bool) -> Self {
        match (member, abusive) {
            (true, true) => Cell::SubgroupPos,
            (true, false) => Cell::SubgroupNeg,
            (false, true) => Cell::BackgroundPos,
            (false, false) => Cell::BackgroundNeg,
        }
    }

    fn describe(self) -> (Side, &'static str) {
        match self {
            Cell::SubgroupPos => (Side::Positive, "subgroup"),
            Cell::SubgroupNeg => (Side::Negative, "subgroup"),
            Cell::BackgroundPos => (Side::Positive, "background"),
            Cell::BackgroundNeg => (Side::Negative, "background"),
        }
    }
}

/// Scored, labeled documents prepared for repeated metric evaluation.
///
/// Documents are ranked by score once; every AUC afterwards is a single linear
/// sweep over that ranking with integer pair counts.
#[derive(Debug, Clone)]
pub struct EvalSet {
    ids: Vec<String>,
    lower_texts: Vec<String>,
    scores: Vec<f64>,
    labels: Vec<bool>,
    /// Document indices in ascending score order.
    order: Vec<usize>,
    /// `tie_end[k]` is true when `order[k]` closes a run of equal scores.
    tie_end: Vec<bool>,
}

impl EvalSet {
    /// Uses each document's own `score` field.
    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        let scores = corpus
            .iter()
            .map(|d| {
                d.score
                    .ok_or_else(|| AuditError::MissingScore(d.id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(corpus, scores)
    }

    /// Looks every document up in `scores`; `arm` names the score source in
    /// coverage errors.
    pub fn with_scores(corpus: &Corpus, scores: &ScoreMap, arm: &str) -> Result<Self> {
        let values = corpus
            .iter()
            .map(|d| {
                scores.get(&d.id).ok_or_else(|| AuditError::Coverage {
                    id: d.id.clone(),
                    arm: arm.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::build(corpus, values)
    }

    /// Builds from parallel arrays; used where no document text is needed.
    pub fn from_parts(texts: Vec<String>, scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        if texts.len() != scores.len() || scores.len() != labels.len() {
            return Err(AuditError::LengthMismatch {
                left: scores.len(),
                right: labels.len(),
            });
        }
        let ids = (0..texts.len()).map(|i| i.to_string()).collect();
        let lower_texts = texts.iter().map(|t| t.to_lowercase()).collect();
        Self::assemble(ids, lower_texts, scores, labels)
    }

    fn build(corpus: &Corpus, scores: Vec<f64>) -> Result<Self> {
        let ids = corpus.iter().map(|d| d.id.clone()).collect();
        let lower_texts = corpus.iter().map(|d| d.text.to_lowercase()).collect();
        let labels = corpus.iter().map(|d| d.gold_label.is_abusive()).collect();
        Self::assemble(ids, lower_texts, scores, labels)
    }

    fn assemble(
        ids: Vec<String>,
        lower_texts: Vec<String>,
        scores: Vec<f64>,
        labels: Vec<bool>,
    ) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(AuditError::NonFiniteScore);
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
        let tie_end = (0..order.len())
            .map(|k| k + 1 == order.len() || scores[order[k + 1]] != scores[order[k]])
            .collect();
        Ok(Self {
            ids,
            lower_texts,
            scores,
            labels,
            order,
            tie_end,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn membership(&self, group: &dyn TextMatcher) -> Vec<bool> {
        self.lower_texts
            .iter()
            .map(|t| group.matches_lower(t))
            .collect()
    }

    pub fn subgroup_counts(&self, membership: &[bool]) -> SubgroupCounts {
        let mut c = SubgroupCounts::default();
        for (&m, &l) in membership.iter().zip(&self.labels) {
            if m {
                c.total += 1;
                if l {
                    c.positive += 1;
                } else {
                    c.negative += 1;
                }
            }
        }
        c
    }

    fn cells(&self, membership: &[bool]) -> Vec<Cell> {
        membership
            .iter()
            .zip(&self.labels)
            .map(|(&m, &l)| Cell::of(m, l))
            .collect()
    }

    /// All three metrics in one sweep. `weights[i]` is the multiplicity of
    /// document `i` (all ones when `None`).
    fn sweep(&self, cells: &[Cell], weights: Option<&[u32]>) -> [AucCount; 3] {
        let mut totals = [0u64; 4];
        let mut below = [0u64; 4];
        let mut run = [0u64; 4];
        // twice the win count: 2·(wins) + ties
        let mut wins_x2 = [0u64; 3];
        for (k, &doc) in self.order.iter().enumerate() {
            let w = weights.map_or(1, |w| w[doc] as u64);
            run[cells[doc] as usize] += w;
            if self.tie_end[k] {
                for m in GroupMetric::ALL {
                    let (p, n) = m.sides();
                    let (p, n) = (p as usize, n as usize);
                    wins_x2[m.index()] += 2 * run[p] * below[n] + run[p] * run[n];
                }
                for c in 0..4 {
                    below[c] += run[c];
                    totals[c] += run[c];
                    run[c] = 0;
                }
            }
        }
        GroupMetric::ALL.map(|m| {
            let (p, n) = m.sides();
            AucCount {
                wins_x2: wins_x2[m.index()],
                pos: totals[p as usize],
                neg: totals[n as usize],
            }
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct AucCount {
    wins_x2: u64,
    pos: u64,
    neg: u64,
}

impl AucCount {
    fn value(self) -> Option<f64> {
        (self.pos > 0 && self.neg > 0)
            .then(|| self.wins_x2 as f64 / (2 * self.pos * self.neg) as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SubgroupCounts {
    pub total: usize,
    pub positive: usize,
    pub negative: usize,
}

fn evaluate(eval: &EvalSet, group: &dyn TextMatcher, metric: GroupMetric) -> Result<f64> {
    let cells = eval.cells(&eval.membership(group));
    let count = eval.sweep(&cells, None)[metric.index()];
    count.value().ok_or_else(|| {
        let (p, n) = metric.sides();
        let empty = if count.pos == 0 { p } else { n };
        let (side, part) = empty.describe();
        AuditError::InsufficientData {
            metric: metric.name(),
            group: group.name().to_string(),
            side,
            part,
        }
    })
}

/// AUC within the subgroup.
pub fn subgroup_auc(eval: &EvalSet, group: &dyn TextMatcher) -> Result<f64> {
    evaluate(eval, group, GroupMetric::SubgroupAuc)
}

/// AUC of background positives against subgroup negatives.
pub fn bpsn_auc(eval: &EvalSet, group: &dyn TextMatcher) -> Result<f64> {
    evaluate(eval, group, GroupMetric::BpsnAuc)
}

/// AUC of subgroup positives against background negatives.
pub fn bnsp_auc(eval: &EvalSet, group: &dyn TextMatcher) -> Result<f64> {
    evaluate(eval, group, GroupMetric::BnspAuc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_error: f64,
    pub n_subgroup: usize,
    pub n_background: usize,
    pub bootstrap_samples: usize,
    /// Resamples on which the metric was undefined.
    pub discarded: usize,
}

impl MetricValue {
    /// True when the two intervals do not overlap.
    pub fn disjoint_from(&self, other: &MetricValue) -> bool {
        self.ci_high < other.ci_low || other.ci_high < self.ci_low
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricOutcome {
    Value(MetricValue),
    /// Undefined on this evaluation set; the string says why.
    Skipped(String),
}

impl MetricOutcome {
    pub fn value(&self) -> Option<&MetricValue> {
        match self {
            MetricOutcome::Value(v) => Some(v),
            MetricOutcome::Skipped(_) => None,
        }
    }
}

/// Subgroup, BPSN and BNSP AUC for one keyword or theme.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordMetrics {
    pub keyword: String,
    pub counts: SubgroupCounts,
    pub n_background: usize,
    pub subgroup_auc: MetricOutcome,
    pub bpsn_auc: MetricOutcome,
    pub bnsp_auc: MetricOutcome,
}

impl KeywordMetrics {
    pub fn get(&self, metric: GroupMetric) -> &MetricOutcome {
        match metric {
            GroupMetric::SubgroupAuc => &self.subgroup_auc,
            GroupMetric::BpsnAuc => &self.bpsn_auc,
            GroupMetric::BnspAuc => &self.bnsp_auc,
        }
    }

    pub fn value(&self, metric: GroupMetric) -> Option<&MetricValue> {
        self.get(metric).value()
    }
}

/// Mixes a group name into a base seed so each group's resamples are fixed by
/// its name, independent of where it sits in the keyword list.
pub fn group_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a followed by a splitmix64 finalizer
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Point estimates and bootstrap intervals of all three metrics for `group`.
///
/// The three metrics share resamples. `boot.seed` is combined with the group
/// name, so a given group always sees the same resamples for a given seed.
pub fn keyword_metrics(
    eval: &EvalSet,
    group: &dyn TextMatcher,
    boot: &Bootstrap,
) -> KeywordMetrics {
    let membership = eval.membership(group);
    let counts = eval.subgroup_counts(&membership);
    let cells = eval.cells(&membership);
    let points = eval.sweep(&cells, None);
    let boot = boot.with_seed(group_seed(boot.seed, group.name()));

    let any_defined = points.iter().any(|c| c.value().is_some());
    let resampled: Vec<[Option<f64>; 3]> = if any_defined {
        boot.replicate_counts(eval.len(), |w| {
            eval.sweep(&cells, Some(w)).map(AucCount::value)
        })
    } else {
        Vec::new()
    };

    let outcome = |m: GroupMetric| -> MetricOutcome {
        let count = points[m.index()];
        let Some(point) = count.value() else {
            let (p, n) = m.sides();
            let empty = if count.pos == 0 { p } else { n };
            let (side, part) = empty.describe();
            return MetricOutcome::Skipped(format!("no {side} examples in the {part}"));
        };
        let stats: Vec<Option<f64>> = resampled.iter().map(|r| r[m.index()]).collect();
        match boot.interval(point, &stats, Some((0.0, 1.0))) {
            Ok(iv) => MetricOutcome::Value(MetricValue {
                point,
                ci_low: iv.low,
                ci_high: iv.high,
                std_error: iv.std_error,
                n_subgroup: counts.total,
                n_background: eval.len() - counts.total,
                bootstrap_samples: boot.samples,
                discarded: iv.discarded,
            }),
            Err(e) => MetricOutcome::Skipped(e.to_string()),
        }
    };

    KeywordMetrics {
        keyword: group.name().to_string(),
        counts,
        n_background: eval.len() - counts.total,
        subgroup_auc: outcome(GroupMetric::SubgroupAuc),
        bpsn_auc: outcome(GroupMetric::BpsnAuc),
        bnsp_auc: outcome(GroupMetric::BnspAuc),
    }
}

/// ROC or PR AUC summarized over bootstrap resamples of the whole set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetric {
    pub point: f64,
    pub bootstrap_mean: f64,
    pub bootstrap_sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateMetrics {
    pub roc_auc: AggregateMetric,
    pub pr_auc: AggregateMetric,
}

pub fn aggregate_metrics(eval: &EvalSet, boot: &Bootstrap) -> Result<AggregateMetrics> {
    let roc_point = roc_auc(eval.scores(), eval.labels())?;
    let pr_point = pr_auc(eval.scores(), eval.labels())?;
    let stats = boot.replicate(eval.len(), |idx| {
        let s: Vec<f64> = idx.iter().map(|&i| eval.scores[i]).collect();
        let l: Vec<bool> = idx.iter().map(|&i| eval.labels[i]).collect();
        (roc_auc(&s, &l).ok(), pr_auc(&s, &l).ok())
    });
    let summarize = |point: f64, values: Vec<f64>| -> Result<AggregateMetric> {
        let discarded = boot.samples - values.len();
        if values.is_empty() || discarded as f64 > MAX_DEGENERATE_SHARE * boot.samples as f64 {
            return Err(AuditError::TooManyDegenerate {
                discarded,
                total: boot.samples,
            });
        }
        let (mean, sd) = mean_sd(&values);
        Ok(AggregateMetric {
            point,
            bootstrap_mean: mean,
            bootstrap_sd: sd,
        })
    };
    Ok(AggregateMetrics {
        roc_auc: summarize(roc_point, stats.iter().filter_map(|s| s.0).collect())?,
        pr_auc: summarize(pr_point, stats.iter().filter_map(|s| s.1).collect())?,
    })
}
