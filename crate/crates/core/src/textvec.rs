//! Tokenization and tf-idf vectorization with document-frequency band filtering.
//!
//! The vectorizer follows the common "smooth idf" convention:
//! `idf(t) = ln((1 + n) / (1 + df(t))) + 1`, raw term counts, and l2-normalized
//! output rows. Vocabulary order is lexicographic so a refit on the same corpus
//! reproduces the same column layout.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_file, Corpus};
use crate::error::{AuditError, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
const MODEL_FORMAT: &str = "kwaudit-vectorizer";
const MODEL_VERSION: u32 = 1;

/// The bundled 318-word English stopword list.
pub fn english_stopwords() -> &'static BTreeSet<String> {
    static WORDS: OnceLock<BTreeSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| {
        ENGLISH_STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(String::from)
            .collect()
    })
}

/// Lowercased maximal alphanumeric runs of at least two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().nth(1).is_some())
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorizerConfig {
    /// Upper document-frequency bound as a fraction of the corpus.
    pub max_df: f64,
    /// Lower document-frequency bound as a fraction of the corpus.
    pub min_df: f64,
    pub stopwords: BTreeSet<String>,
}

impl Default for VectorizerConfig {
    fn default() -> Self {
        Self {
            max_df: 0.05,
            min_df: 0.0002,
            stopwords: english_stopwords().clone(),
        }
    }
}

impl VectorizerConfig {
    pub fn new(max_df: f64, min_df: f64) -> Self {
        Self {
            max_df,
            min_df,
            ..Self::default()
        }
    }

    pub fn with_stopwords<S: Into<String>>(mut self, words: impl IntoIterator<Item = S>) -> Self {
        self.stopwords = words.into_iter().map(|w| w.into().to_lowercase()).collect();
        self
    }

    /// Inclusive document-count band `[min, max]` for a corpus of `n` documents.
    ///
    /// Fractions are converted with `ceil(min_df·n)` and `floor(max_df·n)`; a
    /// 1e-9 slack absorbs representation error in products such as `0.0002 · 10000`.
    pub fn count_bounds(&self, n: usize) -> (usize, usize) {
        let n = n as f64;
        let lo = (self.min_df * n - 1e-9).ceil().max(0.0) as usize;
        let hi = (self.max_df * n + 1e-9).floor().max(0.0) as usize;
        (lo, hi)
    }

    fn validate(&self) -> Result<()> {
        if !(self.max_df > 0.0 && self.max_df <= 1.0) || !(self.min_df >= 0.0 && self.min_df < 1.0)
        {
            return Err(AuditError::Config(format!(
                "document-frequency band [{}, {}] is not valid",
                self.min_df, self.max_df
            )));
        }
        if self.min_df >= self.max_df {
            return Err(AuditError::Config(format!(
                "min_df {} must be below max_df {}",
                self.min_df, self.max_df
            )));
        }
        Ok(())
    }
}

/// Sparse row: strictly increasing column indices with non-zero values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector {
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// A fitted tf-idf vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizerModel {
    vocabulary: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f64>,
    n_documents: usize,
    config: VectorizerConfig,
}

#[derive(Serialize, Deserialize)]
struct VectorizerFile {
    format: String,
    version: u32,
    n_documents: usize,
    config: VectorizerConfig,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
}

impl VectorizerModel {
    /// Learns vocabulary and idf weights from `texts`, one document each.
    pub fn fit<S: AsRef<str>>(texts: &[S], config: VectorizerConfig) -> Result<Self> {
        config.validate()?;
        if texts.is_empty() {
            return Err(AuditError::EmptyCorpus);
        }
        let n = texts.len();
        let mut df: HashMap<String, usize> = HashMap::new();
        for text in texts {
            let unique: HashSet<String> = tokenize(text.as_ref()).into_iter().collect();
            for token in unique {
                *df.entry(token).or_insert(0) += 1;
            }
        }

        let (lo, hi) = config.count_bounds(n);
        let mut kept: Vec<(String, usize)> = df
            .into_iter()
            .filter(|(t, c)| *c >= lo && *c <= hi && !config.stopwords.contains(t))
            .collect();
        if kept.is_empty() {
            return Err(AuditError::EmptyVocabulary);
        }
        kept.sort_unstable_by(|a, b| a.0.cmp(&b.0));

        let idf = kept
            .iter()
            .map(|(_, c)| ((1.0 + n as f64) / (1.0 + *c as f64)).ln() + 1.0)
            .collect();
        let vocabulary: Vec<String> = kept.into_iter().map(|(t, _)| t).collect();
        Ok(Self::assemble(vocabulary, idf, n, config))
    }

    pub fn fit_corpus(corpus: &Corpus, config: VectorizerConfig) -> Result<Self> {
        let texts: Vec<&str> = corpus.iter().map(|d| d.text.as_str()).collect();
        Self::fit(&texts, config)
    }

    fn assemble(
        vocabulary: Vec<String>,
        idf: Vec<f64>,
        n_documents: usize,
        config: VectorizerConfig,
    ) -> Self {
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            vocabulary,
            index,
            idf,
            n_documents,
            config,
        }
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    pub fn n_documents(&self) -> usize {
        self.n_documents
    }

    pub fn config(&self) -> &VectorizerConfig {
        &self.config
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Count·idf weights scaled to unit l2 norm. Unknown tokens are ignored.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<usize, u32> = HashMap::new();
        for token in tokenize(text) {
            if let Some(&col) = self.index.get(&token) {
                *counts.entry(col).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(col, c)| (col, c as f64 * self.idf[col]))
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        if norm == 0.0 {
            return SparseVector::default();
        }
        let (indices, values) = entries.into_iter().map(|(i, v)| (i, v / norm)).unzip();
        SparseVector { indices, values }
    }

    pub fn transform_corpus(&self, corpus: &Corpus) -> Vec<SparseVector> {
        corpus.iter().map(|d| self.transform(&d.text)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = VectorizerFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            n_documents: self.n_documents,
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
            idf: self.idf.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| AuditError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VectorizerFile =
            serde_json::from_str(text).map_err(|e| AuditError::Serialization(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(AuditError::Serialization(format!(
                "unsupported vectorizer file {} v{}",
                file.format, file.version
            )));
        }
        if file.vocabulary.len() != file.idf.len() {
            return Err(AuditError::DimensionMismatch {
                expected: file.vocabulary.len(),
                found: file.idf.len(),
            });
        }
        Ok(Self::assemble(
            file.vocabulary,
            file.idf,
            file.n_documents,
            file.config,
        ))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AuditError::io(path, e))?;
        Self::from_json(&text)
    }
}
