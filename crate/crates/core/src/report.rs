//! CSV and SVG renderings of audit results.
//!
//! Every CSV starts with a `#` comment line naming the command and its full
//! configuration, so a file alone is enough to reproduce it. Nothing
//! time-dependent is written.

use std::fmt::Write as _;

use crate::corpus::{AuditConfig, QuadrantCounts};
use crate::error::{AuditError, Result};
use crate::fairmetrics::{GroupMetric, KeywordMetrics, MetaMetricReport, MetricOutcome};
use crate::linmodel::RankedKeyword;
use crate::mitigation::{ComparisonReport, CorrelationRow, MitigationPlan};

/// Comment line identifying the producing command.
pub fn header(command: &str, config: &AuditConfig) -> String {
    format!("# audit {command} {}\n", config.describe())
}

fn csv_table<R, I>(header_line: &str, columns: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let ser = |e: csv::Error| AuditError::Serialization(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).map_err(ser)?;
    for row in rows {
        w.write_record(row).map_err(ser)?;
    }
    let body = w
        .into_inner()
        .map_err(|e| AuditError::Serialization(e.to_string()))?;
    let mut out = header_line.to_string();
    out.push_str(&String::from_utf8(body).map_err(|e| AuditError::Serialization(e.to_string()))?);
    Ok(out)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn keywords_csv(header_line: &str, keywords: &[RankedKeyword]) -> Result<String> {
    csv_table(
        header_line,
        &["rank", "token", "weight"],
        keywords
            .iter()
            .map(|k| [(k.rank).to_string(), k.token.clone(), k.weight.to_string()]),
    )
}

pub fn quadrants_csv(header_line: &str, counts: &QuadrantCounts) -> Result<String> {
    csv_table(
        header_line,
        &["quadrant", "count"],
        [
            ("TP", counts.tp),
            ("FP", counts.fp),
            ("FN", counts.fn_),
            ("TN", counts.tn),
        ]
        .iter()
        .map(|(q, c)| [q.to_string(), c.to_string()]),
    )
}

/// One row per defined (group, metric) pair.
pub fn metrics_csv(header_line: &str, rows: &[KeywordMetrics]) -> Result<String> {
    let mut records = Vec::new();
    for r in rows {
        for m in GroupMetric::ALL {
            if let Some(v) = r.value(m) {
                records.push([
                    r.keyword.clone(),
                    m.name().to_string(),
                    v.point.to_string(),
                    v.ci_low.to_string(),
                    v.ci_high.to_string(),
                    v.std_error.to_string(),
                    v.n_subgroup.to_string(),
                    r.counts.positive.to_string(),
                    r.counts.negative.to_string(),
                    v.n_background.to_string(),
                    v.discarded.to_string(),
                ]);
            }
        }
    }
    csv_table(
        header_line,
        &[
            "keyword",
            "metric",
            "point",
            "ci_low",
            "ci_high",
            "std_error",
            "n_subgroup",
            "n_subgroup_abusive",
            "n_subgroup_non_abusive",
            "n_background",
            "discarded_resamples",
        ],
        records,
    )
}

/// Metrics that could not be computed, with the reason.
pub fn skipped_csv(header_line: &str, rows: &[KeywordMetrics]) -> Result<String> {
    let mut records = Vec::new();
    for r in rows {
        for m in GroupMetric::ALL {
            if let MetricOutcome::Skipped(reason) = r.get(m) {
                records.push([r.keyword.clone(), m.name().to_string(), reason.clone()]);
            }
        }
    }
    csv_table(header_line, &["keyword", "metric", "reason"], records)
}

pub type MetaRows = [(GroupMetric, Result<MetaMetricReport>)];

/// Metric × {maxmin, var} rows with one column per arm. Undefined cells are
/// left empty.
pub fn meta_csv(
    header_line: &str,
    baseline: &MetaRows,
    mitigated: Option<&MetaRows>,
) -> Result<String> {
    let find = |rows: &MetaRows, m: GroupMetric| {
        rows.iter()
            .find(|(x, _)| *x == m)
            .and_then(|(_, r)| r.as_ref().ok().copied())
    };
    let mut records = Vec::new();
    for m in GroupMetric::ALL {
        let b = find(baseline, m);
        let g = mitigated.map(|rows| find(rows, m));
        for (name, pick) in [
            (
                "maxmin",
                (|r: MetaMetricReport| r.maxmin) as fn(MetaMetricReport) -> f64,
            ),
            ("var", |r: MetaMetricReport| r.var),
        ] {
            let mut rec = vec![m.name().to_string(), name.to_string(), opt(b.map(pick))];
            if let Some(g) = g {
                rec.push(opt(g.map(pick)));
            }
            records.push(rec);
        }
    }
    let mut cols = vec!["metric", "meta", "baseline"];
    if mitigated.is_some() {
        cols.push("mitigated");
    }
    csv_table(header_line, &cols, records)
}

pub fn comparison_csv(header_line: &str, report: &ComparisonReport) -> Result<String> {
    let mut records = Vec::new();
    for g in &report.groups {
        for m in GroupMetric::ALL {
            let b = g.baseline.value(m);
            let t = g.mitigated.value(m);
            records.push([
                g.keyword().to_string(),
                m.name().to_string(),
                opt(b.map(|v| v.point)),
                opt(b.map(|v| v.ci_low)),
                opt(b.map(|v| v.ci_high)),
                opt(t.map(|v| v.point)),
                opt(t.map(|v| v.ci_low)),
                opt(t.map(|v| v.ci_high)),
                opt(g.delta(m)),
                g.ci_disjoint(m).map(|d| d.to_string()).unwrap_or_default(),
            ]);
        }
    }
    csv_table(
        header_line,
        &[
            "keyword",
            "metric",
            "baseline",
            "baseline_low",
            "baseline_high",
            "mitigated",
            "mitigated_low",
            "mitigated_high",
            "delta",
            "ci_disjoint",
        ],
        records,
    )
}

pub fn comparison_meta_csv(header_line: &str, report: &ComparisonReport) -> Result<String> {
    let mut records = Vec::new();
    for m in &report.meta {
        records.push([
            m.metric.name().to_string(),
            "maxmin".into(),
            m.baseline.maxmin.to_string(),
            m.mitigated.maxmin.to_string(),
            m.maxmin_delta().to_string(),
        ]);
        records.push([
            m.metric.name().to_string(),
            "var".into(),
            m.baseline.var.to_string(),
            m.mitigated.var.to_string(),
            m.var_delta().to_string(),
        ]);
    }
    csv_table(
        header_line,
        &["metric", "meta", "baseline", "mitigated", "delta"],
        records,
    )
}

pub fn aggregate_csv(header_line: &str, report: &ComparisonReport) -> Result<String> {
    let mut records = Vec::new();
    for (arm, agg) in [
        ("baseline", &report.aggregate_baseline),
        ("mitigated", &report.aggregate_mitigated),
    ] {
        for (metric, v) in [("roc_auc", agg.roc_auc), ("pr_auc", agg.pr_auc)] {
            records.push([
                metric.to_string(),
                arm.to_string(),
                v.point.to_string(),
                v.bootstrap_mean.to_string(),
                v.bootstrap_sd.to_string(),
            ]);
        }
    }
    csv_table(
        header_line,
        &["metric", "arm", "point", "bootstrap_mean", "bootstrap_sd"],
        records,
    )
}

pub fn correlations_csv(header_line: &str, rows: &[CorrelationRow]) -> Result<String> {
    csv_table(
        header_line,
        &["x", "y", "n", "r", "p", "permutations", "note"],
        rows.iter().map(|row| match &row.result {
            Ok(c) => [
                row.x.clone(),
                row.y.clone(),
                row.n.to_string(),
                c.r.to_string(),
                c.p.to_string(),
                c.permutations.to_string(),
                String::new(),
            ],
            Err(note) => [
                row.x.clone(),
                row.y.clone(),
                row.n.to_string(),
                String::new(),
                String::new(),
                String::new(),
                note.clone(),
            ],
        }),
    )
}

pub fn mitigation_summary_csv(header_line: &str, plan: &MitigationPlan) -> Result<String> {
    let mut records: Vec<[String; 5]> = plan
        .per_keyword
        .iter()
        .map(|q| {
            [
                q.keyword.clone(),
                q.existing_negatives.to_string(),
                q.requested.to_string(),
                q.sampled_ids.len().to_string(),
                q.shortfall().to_string(),
            ]
        })
        .collect();
    records.push([
        "(merged)".into(),
        String::new(),
        plan.requested_total().to_string(),
        plan.merged_ids().len().to_string(),
        String::new(),
    ]);
    csv_table(
        header_line,
        &[
            "keyword",
            "existing_negatives",
            "requested",
            "sampled",
            "shortfall",
        ],
        records,
    )
}

/// One bar of a chart: a value with an optional interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    pub interval: Option<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Horizontal bar chart over `[lo, hi]`, with whiskers for intervals and a
/// vertical reference line at `reference` when given.
pub fn bar_chart_svg(
    title: &str,
    bars: &[Bar],
    (lo, hi): (f64, f64),
    reference: Option<f64>,
) -> String {
    const LEFT: f64 = 160.0;
    const WIDTH: f64 = 420.0;
    const ROW: f64 = 22.0;
    const TOP: f64 = 40.0;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let x = |v: f64| LEFT + (v.clamp(lo, hi) - lo) / span * WIDTH;
    let height = TOP + ROW * bars.len() as f64 + 30.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="sans-serif" font-size="12">"#,
        LEFT + WIDTH + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
    let base = x(reference.unwrap_or(lo).max(lo));
    for (i, b) in bars.iter().enumerate() {
        let y = TOP + ROW * i as f64;
        let (x0, x1) = if x(b.value) >= base {
            (base, x(b.value))
        } else {
            (x(b.value), base)
        };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 14.0,
            escape(&b.label)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{:.1}" width="{:.2}" height="14" fill="#6a8fc7"/>"##,
            y + 3.0,
            x1 - x0
        );
        if let Some((l, h)) = b.interval {
            let cy = y + 10.0;
            let _ = writeln!(
                s,
                r#"<path d="M{:.2} {cy:.1}H{:.2}M{:.2} {:.1}V{:.1}M{:.2} {:.1}V{:.1}" stroke="black" fill="none"/>"#,
                x(l),
                x(h),
                x(l),
                cy - 4.0,
                cy + 4.0,
                x(h),
                cy - 4.0,
                cy + 4.0
            );
        }
    }
    let axis_y = TOP + ROW * bars.len() as f64 + 4.0;
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {axis_y:.1}H{:.1}" stroke="black"/>"#,
        LEFT + WIDTH
    );
    for (v, anchor) in [(lo, "start"), (hi, "end")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{v}</text>"#,
            x(v),
            axis_y + 16.0
        );
    }
    if let Some(r) = reference {
        let _ = writeln!(
            s,
            r#"<path d="M{:.2} {}V{axis_y:.1}" stroke="gray" stroke-dasharray="3,3"/>"#,
            x(r),
            TOP - 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Per-group chart of one metric with confidence intervals.
pub fn metric_svg(metric: GroupMetric, rows: &[KeywordMetrics]) -> String {
    let bars: Vec<Bar> = rows
        .iter()
        .filter_map(|r| {
            let v = r.value(metric)?;
            Some(Bar {
                label: r.keyword.clone(),
                value: v.point,
                interval: Some((v.ci_low, v.ci_high)),
            })
        })
        .collect();
    let lo = bars
        .iter()
        .map(|b| b.interval.map_or(b.value, |i| i.0))
        .fold(1.0f64, f64::min);
    let lo = ((lo * 10.0).floor() / 10.0).max(0.0);
    bar_chart_svg(metric.name(), &bars, (lo, 1.0), None)
}

/// Mitigated-minus-baseline point deltas for every group and metric.
pub fn deltas_svg(report: &ComparisonReport) -> String {
    let bars: Vec<Bar> = report
        .groups
        .iter()
        .flat_map(|g| {
            GroupMetric::ALL.into_iter().filter_map(move |m| {
                Some(Bar {
                    label: format!("{} {}", g.keyword(), m.name()),
                    value: g.delta(m)?,
                    interval: None,
                })
            })
        })
        .collect();
    let extent = bars.iter().map(|b| b.value.abs()).fold(0.01f64, f64::max);
    bar_chart_svg("mitigated - baseline", &bars, (-extent, extent), Some(0.0))
}
