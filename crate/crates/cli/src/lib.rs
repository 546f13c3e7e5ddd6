//! The `audit` command line: argument parsing, configuration merging, and one
//! function per subcommand. `run` never exits the process, so commands can be
//! driven in-process by tests.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use kwaudit::corpus::{
    load_corpus, load_groups, write_file, AuditConfig, Corpus, CorpusFormat, GroupSet, ScoreMap,
};
use kwaudit::fairmetrics::{EvalSet, GroupMetric};
use kwaudit::mitigation::{
    build_mitigation_sample, ci_width_correlation, compare_models, se_agreement,
};
use kwaudit::pipeline::{discover, meta_report, metrics_report};
use kwaudit::report;
use kwaudit::synthgen::{generate, GeneratorSpec};
use kwaudit::{AuditError, ErrorKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandResult {
    pub exit_code: i32,
    pub artifacts_written: Vec<PathBuf>,
    pub summary: Vec<String>,
    /// Set whenever `exit_code` is non-zero.
    pub diagnostic: Option<String>,
}

impl CommandResult {
    fn failure(exit_code: i32, diagnostic: String) -> Self {
        Self {
            exit_code,
            diagnostic: Some(diagnostic),
            ..Self::default()
        }
    }
}

fn exit_code(e: &AuditError) -> i32 {
    match e.kind() {
        ErrorKind::Validation => EXIT_VALIDATION,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Internal => EXIT_INTERNAL,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "audit",
    version,
    about = "Keyword-level false-positive bias audit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every analysis command. Flags override the config file,
/// which overrides built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scores strictly above this are predicted abusive
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Bootstrap resamples per interval
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long = "top-k")]
    pub top_k: Option<usize>,
    /// Corpus format; inferred from the extension when omitted
    #[arg(long, value_parser = parse_format)]
    pub format: Option<CorpusFormat>,
}

fn parse_format(s: &str) -> Result<CorpusFormat, String> {
    s.parse()
}

impl Common {
    pub fn resolve(&self) -> kwaudit::Result<AuditConfig> {
        let mut config = match &self.config {
            Some(path) => AuditConfig::load(path)?,
            None => AuditConfig::default(),
        };
        if let Some(v) = self.seed {
            config.rng_seed = v;
        }
        if let Some(v) = self.threshold {
            config.threshold = v;
        }
        if let Some(v) = self.bootstrap {
            config.bootstrap_samples = v;
        }
        if let Some(v) = self.top_k {
            config.top_k = v;
        }
        config.validate()?;
        Ok(config)
    }

    fn load(&self, path: &Path) -> kwaudit::Result<Corpus> {
        let format = self.format.unwrap_or_else(|| CorpusFormat::from_path(path));
        load_corpus(path, format)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank keywords that push documents toward false positives
    Discover {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Subgroup, BPSN and BNSP AUC with confidence intervals per keyword
    Metrics {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        keywords: PathBuf,
        /// Score file (id,score); defaults to scores in the corpus
        #[arg(long)]
        scores: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-keyword maxmin and var meta-metrics
    Meta {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        keywords: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long = "mitigated-scores")]
        mitigated_scores: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Sample keyword-matching pool documents to add to training data
    Mitigate {
        /// Baseline training corpus
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        keywords: PathBuf,
        /// Pool documents requested per existing non-abusive keyword document
        #[arg(long)]
        ratio: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare baseline and mitigated scores on a test corpus
    Compare {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        keywords: PathBuf,
        #[arg(long)]
        scores: PathBuf,
        #[arg(long = "mitigated-scores")]
        mitigated_scores: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Correlate per-keyword bootstrap standard errors with subgroup sizes
    Corr {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        keywords: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long = "mitigated-scores")]
        mitigated_scores: Option<PathBuf>,
        #[arg(long, default_value = "bpsn_auc")]
        metric: GroupMetric,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic corpora
    Synth {
        #[command(subcommand)]
        action: SynthAction,
    },
}

#[derive(Subcommand, Debug)]
enum SynthAction {
    /// Write train, pool and test corpora plus both arms' test scores
    Generate {
        /// Generator spec (TOML); the planted-keyword scenario when omitted
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandResult::failure(EXIT_VALIDATION, text)
            } else {
                CommandResult {
                    summary: vec![text.trim_end().to_string()],
                    ..CommandResult::default()
                }
            };
        }
    };
    let mut out = Output::default();
    match execute(cli.command, &mut out) {
        Ok(()) => CommandResult {
            exit_code: EXIT_OK,
            artifacts_written: out.written,
            summary: out.summary,
            diagnostic: None,
        },
        Err(e) => CommandResult {
            artifacts_written: out.written,
            ..CommandResult::failure(exit_code(&e), format!("error: {e}"))
        },
    }
}

#[derive(Default)]
struct Output {
    written: Vec<PathBuf>,
    summary: Vec<String>,
}

impl Output {
    fn write(&mut self, path: PathBuf, contents: impl AsRef<[u8]>) -> kwaudit::Result<()> {
        write_file(&path, contents.as_ref())?;
        self.written.push(path);
        Ok(())
    }

    fn say(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }
}

fn eval_set(corpus: &Corpus, scores: Option<&Path>, arm: &str) -> kwaudit::Result<EvalSet> {
    match scores {
        Some(path) => EvalSet::with_scores(corpus, &ScoreMap::load(path)?, arm),
        None => EvalSet::from_corpus(corpus),
    }
}

fn keywords_only(groups: &GroupSet) -> GroupSet {
    GroupSet::from_keywords(groups.keywords.clone())
}

fn execute(command: Command, out: &mut Output) -> kwaudit::Result<()> {
    match command {
        Command::Discover { corpus, common } => cmd_discover(&corpus, &common, out),
        Command::Metrics {
            corpus,
            keywords,
            scores,
            common,
        } => cmd_metrics(&corpus, &keywords, scores.as_deref(), &common, out),
        Command::Meta {
            corpus,
            keywords,
            scores,
            mitigated_scores,
            common,
        } => cmd_meta(
            &corpus,
            &keywords,
            scores.as_deref(),
            mitigated_scores.as_deref(),
            &common,
            out,
        ),
        Command::Mitigate {
            corpus,
            pool,
            keywords,
            ratio,
            common,
        } => cmd_mitigate(&corpus, &pool, &keywords, ratio, &common, out),
        Command::Compare {
            corpus,
            keywords,
            scores,
            mitigated_scores,
            common,
        } => cmd_compare(&corpus, &keywords, &scores, &mitigated_scores, &common, out),
        Command::Corr {
            corpus,
            keywords,
            scores,
            mitigated_scores,
            metric,
            common,
        } => cmd_corr(
            &corpus,
            &keywords,
            scores.as_deref(),
            mitigated_scores.as_deref(),
            metric,
            &common,
            out,
        ),
        Command::Synth {
            action:
                SynthAction::Generate {
                    spec,
                    seed,
                    out: dir,
                },
        } => cmd_synth(spec.as_deref(), seed, &dir, out),
    }
}

fn cmd_discover(corpus: &Path, common: &Common, out: &mut Output) -> kwaudit::Result<()> {
    let config = common.resolve()?;
    let corpus = common.load(corpus)?;
    let found = discover(&corpus, &config)?;
    let h = report::header("discover", &config);
    out.write(
        common.out.join("fp_keywords.csv"),
        report::keywords_csv(&h, &found.keywords)?,
    )?;
    out.write(
        common.out.join("quadrants.csv"),
        report::quadrants_csv(&h, &found.counts)?,
    )?;
    out.write(
        common.out.join("vectorizer.json"),
        found.vectorizer.to_json()?,
    )?;
    out.write(common.out.join("fp_model.json"), found.model.to_json()?)?;
    out.say(format!("config: {}", config.describe()));
    out.say(format!(
        "{} documents: {} TP, {} FP, {} FN, {} TN; vocabulary {}",
        found.counts.total(),
        found.counts.tp,
        found.counts.fp,
        found.counts.fn_,
        found.counts.tn,
        found.vectorizer.len()
    ));
    if found.keywords.len() < config.top_k {
        out.say(format!(
            "top_k {} exceeds the vocabulary; reporting all {} tokens",
            config.top_k,
            found.keywords.len()
        ));
    }
    let t = &found.model.training;
    if !t.converged {
        out.say(format!(
            "warning: training stopped after {} iterations with gradient norm {:e}",
            t.iterations, t.gradient_norm
        ));
    }
    let top: Vec<&str> = found
        .keywords
        .iter()
        .take(10)
        .map(|k| k.token.as_str())
        .collect();
    out.say(format!("top keywords: {}", top.join(", ")));
    Ok(())
}

fn cmd_metrics(
    corpus: &Path,
    keywords: &Path,
    scores: Option<&Path>,
    common: &Common,
    out: &mut Output,
) -> kwaudit::Result<()> {
    let config = common.resolve()?;
    let corpus = common.load(corpus)?;
    let groups = load_groups(keywords)?;
    let eval = eval_set(&corpus, scores, "scores")?;
    let rows = metrics_report(&eval, &groups, &config);
    let h = report::header("metrics", &config);
    out.write(
        common.out.join("metrics.csv"),
        report::metrics_csv(&h, &rows)?,
    )?;
    out.write(
        common.out.join("skipped.csv"),
        report::skipped_csv(&h, &rows)?,
    )?;
    for m in GroupMetric::ALL {
        out.write(
            common.out.join(format!("{}.svg", m.name())),
            report::metric_svg(m, &rows),
        )?;
    }
    out.say(format!("config: {}", config.describe()));
    let skipped = rows
        .iter()
        .flat_map(|r| GroupMetric::ALL.map(|m| r.value(m).is_none()))
        .filter(|&s| s)
        .count();
    out.say(format!(
        "{} groups evaluated at {}% confidence; {} metric values skipped",
        rows.len(),
        config.ci_level * 100.0,
        skipped
    ));
    Ok(())
}

fn cmd_meta(
    corpus: &Path,
    keywords: &Path,
    scores: Option<&Path>,
    mitigated: Option<&Path>,
    common: &Common,
    out: &mut Output,
) -> kwaudit::Result<()> {
    let config = common.resolve()?;
    let corpus = common.load(corpus)?;
    let groups = keywords_only(&load_groups(keywords)?);
    let base_rows = metrics_report(&eval_set(&corpus, scores, "baseline")?, &groups, &config);
    let base = meta_report(&base_rows);
    let mit = match mitigated {
        Some(path) => {
            let eval = eval_set(&corpus, Some(path), "mitigated")?;
            Some(meta_report(&metrics_report(&eval, &groups, &config)))
        }
        None => None,
    };
    let h = report::header("meta", &config);
    out.write(
        common.out.join("meta.csv"),
        report::meta_csv(&h, &base, mit.as_deref())?,
    )?;
    out.say(format!("config: {}", config.describe()));
    for (m, r) in &base {
        match r {
            Ok(r) => out.say(format!("{}: maxmin {:.4} var {:.4}", m, r.maxmin, r.var)),
            Err(e) => out.say(format!("{m}: undefined ({e})")),
        }
    }
    Ok(())
}

fn cmd_mitigate(
    train: &Path,
    pool: &Path,
    keywords: &Path,
    ratio: Option<f64>,
    common: &Common,
    out: &mut Output,
) -> kwaudit::Result<()> {
    let mut config = common.resolve()?;
    if let Some(r) = ratio {
        config.mitigation_ratio = r;
        config.validate()?;
    }
    let train = common.load(train)?;
    let pool = common.load(pool)?;
    let groups = load_groups(keywords)?;
    let plan = build_mitigation_sample(
        &train,
        &pool,
        &groups.keywords,
        config.mitigation_ratio,
        config.rng_seed,
    )?;
    let h = report::header("mitigate", &config);
    out.write(common.out.join("mitigation_sample.jsonl"), plan.to_jsonl()?)?;
    out.write(
        common.out.join("mitigation_documents.jsonl"),
        plan.merged_documents(&pool).to_jsonl()?,
    )?;
    out.write(
        common.out.join("mitigation_summary.csv"),
        report::mitigation_summary_csv(&h, &plan)?,
    )?;
    out.say(format!("config: {}", config.describe()));
    out.say(format!(
        "requested {} documents, sampled {} unique",
        plan.requested_total(),
        plan.merged_ids().len()
    ));
    for q in plan.per_keyword.iter().filter(|q| q.shortfall() > 0) {
        out.say(format!(
            "shortfall for {}: {} of {} requested",
            q.keyword,
            q.shortfall(),
            q.requested
        ));
    }
    Ok(())
}

fn cmd_compare(
    corpus: &Path,
    keywords: &Path,
    scores: &Path,
    mitigated: &Path,
    common: &Common,
    out: &mut Output,
) -> kwaudit::Result<()> {
    let config = common.resolve()?;
    let corpus = common.load(corpus)?;
    let groups = load_groups(keywords)?;
    let r = compare_models(
        &ScoreMap::load(scores)?,
        &ScoreMap::load(mitigated)?,
        &corpus,
        &groups,
        &config,
    )?;
    let h = report::header("compare", &config);
    out.write(
        common.out.join("comparison.csv"),
        report::comparison_csv(&h, &r)?,
    )?;
    out.write(
        common.out.join("comparison_meta.csv"),
        report::comparison_meta_csv(&h, &r)?,
    )?;
    out.write(
        common.out.join("aggregate.csv"),
        report::aggregate_csv(&h, &r)?,
    )?;
    out.write(common.out.join("deltas.svg"), report::deltas_svg(&r))?;
    out.say(format!("config: {}", config.describe()));
    for m in &r.meta {
        out.say(format!(
            "{}: maxmin {:.4} -> {:.4}, var {:.4} -> {:.4}",
            m.metric, m.baseline.maxmin, m.mitigated.maxmin, m.baseline.var, m.mitigated.var
        ));
    }
    out.say(format!(
        "roc_auc {:.4} -> {:.4}, pr_auc {:.4} -> {:.4}",
        r.aggregate_baseline.roc_auc.point,
        r.aggregate_mitigated.roc_auc.point,
        r.aggregate_baseline.pr_auc.point,
        r.aggregate_mitigated.pr_auc.point
    ));
    Ok(())
}

fn cmd_corr(
    corpus: &Path,
    keywords: &Path,
    scores: Option<&Path>,
    mitigated: Option<&Path>,
    metric: GroupMetric,
    common: &Common,
    out: &mut Output,
) -> kwaudit::Result<()> {
    let config = common.resolve()?;
    let corpus = common.load(corpus)?;
    let groups = keywords_only(&load_groups(keywords)?);
    let base_rows = metrics_report(&eval_set(&corpus, scores, "baseline")?, &groups, &config);
    let mut rows = ci_width_correlation(&base_rows, metric, config.permutations, config.rng_seed);
    if let Some(path) = mitigated {
        let mit_rows = metrics_report(
            &eval_set(&corpus, Some(path), "mitigated")?,
            &groups,
            &config,
        );
        for mut row in ci_width_correlation(&mit_rows, metric, config.permutations, config.rng_seed)
        {
            row.x = format!("mitigated_{}", row.x);
            rows.push(row);
        }
        let pairs: Vec<_> = base_rows
            .into_iter()
            .zip(mit_rows)
            .map(
                |(baseline, mitigated)| kwaudit::mitigation::KeywordComparison {
                    baseline,
                    mitigated,
                },
            )
            .collect();
        rows.push(se_agreement(
            &pairs,
            metric,
            config.permutations,
            config.rng_seed,
        ));
    }
    let h = report::header("corr", &config);
    out.write(
        common.out.join("correlations.csv"),
        report::correlations_csv(&h, &rows)?,
    )?;
    out.say(format!("config: {}", config.describe()));
    for row in &rows {
        match &row.result {
            Ok(c) => out.say(format!(
                "{} vs {}: r = {:.3} (p = {:.4}, n = {})",
                row.x, row.y, c.r, c.p, row.n
            )),
            Err(note) => out.say(format!("{} vs {}: {note}", row.x, row.y)),
        }
    }
    Ok(())
}

fn cmd_synth(
    spec: Option<&Path>,
    seed: Option<u64>,
    dir: &Path,
    out: &mut Output,
) -> kwaudit::Result<()> {
    let mut spec = match spec {
        Some(path) => GeneratorSpec::load(path)?,
        None => GeneratorSpec::planted(0),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    let data = generate(&spec)?;
    for path in data.write_to(dir)? {
        out.written.push(path);
    }
    out.say(format!(
        "seed {}: {} train, {} pool, {} test documents over {} keywords",
        spec.seed,
        data.train.len(),
        data.pool.len(),
        data.test.len(),
        spec.keyword_profiles.len()
    ));
    Ok(())
}
