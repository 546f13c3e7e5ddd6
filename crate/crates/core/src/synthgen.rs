//! Deterministic synthetic corpora with planted keyword score bias.
//!
//! Documents are bags of pseudo-word tokens. Each document carries at most one
//! profiled keyword, an abuse label drawn from that keyword's rate, and a
//! surrogate score whose logit is shifted for keyword documents by the
//! profile's `score_bias`. Training data mixes FDR sampling (score-rank
//! weighted, above a cutoff) with uniform prevalence sampling from a finite
//! population; the pool and test sets are fresh draws from the same process.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_file, Corpus, Document, GoldLabel, GroupSet, KeywordSpec, SampleSource, ScoreMap, Split,
};
use crate::error::{AuditError, Result};
use crate::linmodel::sigmoid;
use crate::textvec::english_stopwords;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordProfile {
    pub keyword: String,
    /// Share of documents carrying this keyword.
    pub base_rate: f64,
    pub abusive_given_kw: f64,
    /// Logit shift applied to the baseline score of keyword documents.
    #[serde(default)]
    pub score_bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n_population: usize,
    pub n_train: usize,
    pub n_pool: usize,
    pub n_test: usize,
    /// Share of the training set drawn by FDR sampling.
    pub fdr_fraction: f64,
    /// Score-rank percentile below which documents are never FDR-sampled.
    pub fdr_cutoff: f64,
    pub scorer_noise_sd: f64,
    /// Logit gap between abusive and non-abusive documents.
    pub signal_strength: f64,
    /// Abuse rate of documents without a profiled keyword.
    pub background_abuse_rate: f64,
    /// Multiplier on `score_bias` in the mitigated arm.
    pub mitigation_attenuation: f64,
    /// Fraction of `score_bias` applied to abusive keyword documents.
    pub abusive_bias_share: f64,
    pub filler_vocabulary: usize,
    pub zipf_exponent: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub seed: u64,
    #[serde(rename = "keyword")]
    pub keyword_profiles: Vec<KeywordProfile>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            n_population: 20_000,
            n_train: 5_000,
            n_pool: 10_000,
            n_test: 20_000,
            fdr_fraction: 0.25,
            fdr_cutoff: 0.5,
            scorer_noise_sd: 1.0,
            signal_strength: 3.0,
            background_abuse_rate: 0.15,
            mitigation_attenuation: 0.25,
            abusive_bias_share: 0.5,
            filler_vocabulary: 3_000,
            zipf_exponent: 1.0,
            min_tokens: 8,
            max_tokens: 20,
            seed: 0,
            keyword_profiles: Vec::new(),
        }
    }
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(AuditError::Config(format!(
            "{name} = {v} must lie in [0, 1]"
        )));
    }
    Ok(())
}

impl GeneratorSpec {
    /// The reference scenario: one keyword over-scored by `+2.0` among eight
    /// unbiased ones.
    pub fn planted(seed: u64) -> Self {
        let others = [
            ("river", 0.04, 0.20),
            ("garden", 0.03, 0.15),
            ("market", 0.035, 0.25),
            ("violet", 0.03, 0.10),
            ("harbor", 0.04, 0.30),
            ("meadow", 0.03, 0.20),
            ("copper", 0.035, 0.15),
            ("lantern", 0.03, 0.25),
        ];
        let mut keyword_profiles = vec![KeywordProfile {
            keyword: "planted".into(),
            base_rate: 0.03,
            abusive_given_kw: 0.1,
            score_bias: 2.0,
        }];
        keyword_profiles.extend(others.iter().map(|&(k, rate, abuse)| KeywordProfile {
            keyword: k.into(),
            base_rate: rate,
            abusive_given_kw: abuse,
            score_bias: 0.0,
        }));
        Self {
            n_test: 30_000,
            seed,
            keyword_profiles,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| AuditError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| AuditError::Serialization(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        check_fraction("fdr_fraction", self.fdr_fraction)?;
        check_fraction("fdr_cutoff", self.fdr_cutoff)?;
        check_fraction("background_abuse_rate", self.background_abuse_rate)?;
        check_fraction("abusive_bias_share", self.abusive_bias_share)?;
        if !(self.scorer_noise_sd >= 0.0 && self.scorer_noise_sd.is_finite()) {
            return Err(AuditError::Config(
                "scorer_noise_sd must be finite and >= 0".into(),
            ));
        }
        for (name, v) in [
            ("signal_strength", self.signal_strength),
            ("mitigation_attenuation", self.mitigation_attenuation),
            ("zipf_exponent", self.zipf_exponent),
        ] {
            if !v.is_finite() {
                return Err(AuditError::Config(format!("{name} must be finite")));
            }
        }
        if self.filler_vocabulary == 0 || self.min_tokens == 0 || self.min_tokens > self.max_tokens
        {
            return Err(AuditError::Config(
                "need filler_vocabulary > 0 and 0 < min_tokens <= max_tokens".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for p in &self.keyword_profiles {
            check_fraction(&format!("{}.base_rate", p.keyword), p.base_rate)?;
            check_fraction(
                &format!("{}.abusive_given_kw", p.keyword),
                p.abusive_given_kw,
            )?;
            if !p.score_bias.is_finite() {
                return Err(AuditError::Config(format!(
                    "{}.score_bias must be finite",
                    p.keyword
                )));
            }
            let lower = p.keyword.to_lowercase();
            if lower.len() < 2 || !lower.chars().all(|c| c.is_alphanumeric()) {
                return Err(AuditError::Config(format!(
                    "keyword {:?} must be a single alphanumeric token of 2+ characters",
                    p.keyword
                )));
            }
            if !seen.insert(lower) {
                return Err(AuditError::Config(format!(
                    "duplicate keyword {:?}",
                    p.keyword
                )));
            }
        }
        let total: f64 = self.keyword_profiles.iter().map(|p| p.base_rate).sum();
        if total > 1.0 + 1e-12 {
            return Err(AuditError::InfeasibleSpec(format!(
                "keyword base rates sum to {total}, above 1"
            )));
        }
        if self.n_train > self.n_population {
            return Err(AuditError::InfeasibleSpec(format!(
                "training sample of {} exceeds population of {}",
                self.n_train, self.n_population
            )));
        }
        let eligible = self.n_population - self.fdr_eligible_start();
        if self.n_fdr() > eligible {
            return Err(AuditError::InfeasibleSpec(format!(
                "FDR sample of {} exceeds the {} documents above the score cutoff",
                self.n_fdr(),
                eligible
            )));
        }
        Ok(())
    }

    fn n_fdr(&self) -> usize {
        (self.fdr_fraction * self.n_train as f64).round() as usize
    }

    /// First score rank (ascending) eligible for FDR sampling.
    fn fdr_eligible_start(&self) -> usize {
        ((self.fdr_cutoff * self.n_population as f64).ceil() as usize).min(self.n_population)
    }

    pub fn groups(&self) -> GroupSet {
        GroupSet::from_keywords(
            self.keyword_profiles
                .iter()
                .map(|p| KeywordSpec::single(p.keyword.clone()).expect("validated keyword"))
                .collect(),
        )
    }
}

/// Everything `generate` produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Corpus,
    pub pool: Corpus,
    /// Test documents carry no score; see the two score maps.
    pub test: Corpus,
    pub baseline_scores: ScoreMap,
    pub mitigated_scores: ScoreMap,
    pub groups: GroupSet,
}

impl SyntheticData {
    /// Writes the corpora, score files and keyword list into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        let paths: Vec<PathBuf> = [
            "train.jsonl",
            "pool.jsonl",
            "test.jsonl",
            "baseline_scores.csv",
            "mitigated_scores.csv",
            "keywords.toml",
        ]
        .iter()
        .map(|f| dir.join(f))
        .collect();
        self.train.write_jsonl(&paths[0])?;
        self.pool.write_jsonl(&paths[1])?;
        self.test.write_jsonl(&paths[2])?;
        self.baseline_scores.write(&paths[3])?;
        self.mitigated_scores.write(&paths[4])?;
        write_file(&paths[5], self.groups.to_toml().as_bytes())?;
        Ok(paths)
    }
}

struct Draw {
    text: String,
    abusive: bool,
    baseline: f64,
    mitigated: f64,
}

struct Generator<'a> {
    spec: &'a GeneratorSpec,
    filler: Vec<String>,
    filler_dist: WeightedIndex<f64>,
    lexicon: Vec<String>,
    /// Cumulative keyword base rates.
    cumulative: Vec<f64>,
    noise: Normal<f64>,
}

const SYLLABLES: [&str; 20] = [
    "ba", "ko", "mi", "ru", "te", "shi", "la", "no", "pe", "vu", "da", "ze", "fo", "gi", "ha",
    "ju", "ne", "so", "wa", "yo",
];

fn pseudo_word(mut index: usize, syllables: usize) -> String {
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(SYLLABLES[index % SYLLABLES.len()]);
        index /= SYLLABLES.len();
    }
    w
}

impl<'a> Generator<'a> {
    fn new(spec: &'a GeneratorSpec) -> Self {
        let reserved: BTreeSet<String> = spec
            .keyword_profiles
            .iter()
            .map(|p| p.keyword.to_lowercase())
            .collect();
        let stop = english_stopwords();
        let usable = |w: &String| !reserved.contains(w) && !stop.contains(w.as_str());
        // Filler words have three syllables, abuse-lexicon words four, so the
        // two never collide.
        let filler: Vec<String> = (0..)
            .map(|i| pseudo_word(i, 3))
            .filter(usable)
            .take(spec.filler_vocabulary)
            .collect();
        let lexicon: Vec<String> = (0..)
            .map(|i| pseudo_word(i * 7919 + 13, 4))
            .filter(usable)
            .take(40)
            .collect();
        let weights: Vec<f64> = (0..filler.len())
            .map(|r| (r as f64 + 1.0).powf(-spec.zipf_exponent))
            .collect();
        let mut acc = 0.0;
        let cumulative = spec
            .keyword_profiles
            .iter()
            .map(|p| {
                acc += p.base_rate;
                acc
            })
            .collect();
        Self {
            spec,
            filler,
            filler_dist: WeightedIndex::new(weights).expect("positive weights"),
            lexicon,
            cumulative,
            noise: Normal::new(0.0, spec.scorer_noise_sd).expect("validated sd"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Draw {
        let spec = self.spec;
        let u: f64 = rng.random();
        let profile = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .map(|i| &spec.keyword_profiles[i]);
        let abuse_rate = profile.map_or(spec.background_abuse_rate, |p| p.abusive_given_kw);
        let abusive = rng.random_bool(abuse_rate);

        let n_tokens = rng.random_range(spec.min_tokens..=spec.max_tokens);
        let mut tokens: Vec<&str> = (0..n_tokens)
            .map(|_| self.filler[self.filler_dist.sample(rng)].as_str())
            .collect();
        if abusive {
            for _ in 0..rng.random_range(1..=2) {
                tokens.push(&self.lexicon[rng.random_range(0..self.lexicon.len())]);
            }
        }
        if let Some(p) = profile {
            let at = rng.random_range(0..=tokens.len());
            tokens.insert(at, &p.keyword);
        }

        let signal = if abusive { 0.5 } else { -0.5 } * spec.signal_strength;
        let noise = self.noise.sample(rng);
        let bias = profile.map_or(0.0, |p| {
            p.score_bias
                * if abusive {
                    spec.abusive_bias_share
                } else {
                    1.0
                }
        });
        Draw {
            text: tokens.join(" "),
            abusive,
            baseline: sigmoid(signal + bias + noise),
            mitigated: sigmoid(signal + bias * spec.mitigation_attenuation + noise),
        }
    }
}

fn label(abusive: bool) -> GoldLabel {
    if abusive {
        GoldLabel::Abusive
    } else {
        GoldLabel::NonAbusive
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates a full synthetic audit scenario. Identical specs give identical
/// output.
pub fn generate(spec: &GeneratorSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let gen = Generator::new(spec);

    let mut rng = stream(spec.seed, 0);
    let population: Vec<Draw> = (0..spec.n_population).map(|_| gen.draw(&mut rng)).collect();

    // Ascending score rank; ties broken by index for determinism.
    let mut by_score: Vec<usize> = (0..population.len()).collect();
    by_score.sort_by(|&a, &b| {
        population[a]
            .baseline
            .total_cmp(&population[b].baseline)
            .then(a.cmp(&b))
    });
    let start = spec.fdr_eligible_start();
    let eligible = &by_score[start..];
    let n = spec.n_population as f64;

    let mut rng = stream(spec.seed, 1);
    let fdr_picks = rand::seq::index::sample_weighted(
        &mut rng,
        eligible.len(),
        |i| (start + i + 1) as f64 / n,
        spec.n_fdr(),
    )
    .map_err(|e| AuditError::InfeasibleSpec(e.to_string()))?;
    let mut source = vec![None; population.len()];
    for k in fdr_picks {
        source[eligible[k]] = Some(SampleSource::Fdr);
    }
    let rest: Vec<usize> = (0..population.len())
        .filter(|&i| source[i].is_none())
        .collect();
    let n_prev = spec.n_train - spec.n_fdr();
    for k in rand::seq::index::sample(&mut rng, rest.len(), n_prev) {
        source[rest[k]] = Some(SampleSource::Prevalence);
    }

    let train_docs = population
        .iter()
        .zip(&source)
        .enumerate()
        .filter_map(|(i, (d, s))| {
            s.map(|s| Document {
                id: format!("pop-{i:06}"),
                text: d.text.clone(),
                score: Some(d.baseline),
                gold_label: label(d.abusive),
                sample_source: s,
                split: Split::Train,
            })
        })
        .collect();

    let mut rng = stream(spec.seed, 2);
    let pool_docs = (0..spec.n_pool)
        .map(|i| {
            let d = gen.draw(&mut rng);
            Document {
                id: format!("pool-{i:06}"),
                text: d.text,
                score: Some(d.baseline),
                gold_label: label(d.abusive),
                sample_source: SampleSource::Prevalence,
                split: Split::Train,
            }
        })
        .collect();

    let mut rng = stream(spec.seed, 3);
    let mut test_docs = Vec::with_capacity(spec.n_test);
    let mut baseline_scores = ScoreMap::new();
    let mut mitigated_scores = ScoreMap::new();
    for i in 0..spec.n_test {
        let d = gen.draw(&mut rng);
        let id = format!("test-{i:06}");
        baseline_scores.insert(id.clone(), d.baseline)?;
        mitigated_scores.insert(id.clone(), d.mitigated)?;
        test_docs.push(Document {
            id,
            text: d.text,
            score: None,
            gold_label: label(d.abusive),
            sample_source: SampleSource::Prevalence,
            split: Split::Test,
        });
    }

    Ok(SyntheticData {
        train: Corpus::new(train_docs)?,
        pool: Corpus::new(pool_docs)?,
        test: Corpus::new(test_docs)?,
        baseline_scores,
        mitigated_scores,
        groups: spec.groups(),
    })
}
