//! Documents, corpus ingestion and confusion-quadrant labeling.
//!
//! A [`Corpus`] is an ordered, id-unique list of [`Document`]s. It is built once
//! (from a file or in memory) and never mutated afterwards.

mod config;
mod keywords;
mod scores;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

pub use config::{AuditConfig, CiMethod};
pub use keywords::{load_groups, subgroup_split, GroupSet, KeywordSpec, TextMatcher, ThemeSpec};
pub use scores::ScoreMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldLabel {
    Abusive,
    NonAbusive,
}

impl GoldLabel {
    pub fn is_abusive(self) -> bool {
        self == GoldLabel::Abusive
    }
}

/// How a document entered the annotated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    /// Drawn preferentially from high-scoring content.
    Fdr,
    /// Drawn at random from viewed content.
    Prevalence,
    /// Added by keyword-targeted augmentation.
    Mitigation,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

macro_rules! parse_snake_enum {
    ($ty:ty, $($text:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($variant),)+
                    other => Err(format!(
                        "unknown {} {:?} (expected one of: {})",
                        stringify!($ty),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

parse_snake_enum!(GoldLabel, "abusive" => GoldLabel::Abusive, "non_abusive" => GoldLabel::NonAbusive);
parse_snake_enum!(
    SampleSource,
    "fdr" => SampleSource::Fdr,
    "prevalence" => SampleSource::Prevalence,
    "mitigation" => SampleSource::Mitigation,
    "other" => SampleSource::Other,
);
parse_snake_enum!(Split, "train" => Split::Train, "test" => Split::Test);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub score: Option<f64>,
    pub gold_label: GoldLabel,
    pub sample_source: SampleSource,
    pub split: Split,
}

impl Document {
    fn validate(&self) -> Result<()> {
        if let Some(score) = self.score {
            if !(0.0..=1.0).contains(&score) {
                return Err(AuditError::InvalidRecord {
                    id: self.id.clone(),
                    message: format!("score {score} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

/// Confusion quadrant of a scored document against its gold label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    TruePositive,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

impl Quadrant {
    pub fn from_outcome(predicted_positive: bool, abusive: bool) -> Self {
        match (predicted_positive, abusive) {
            (true, true) => Quadrant::TruePositive,
            (true, false) => Quadrant::FalsePositive,
            (false, true) => Quadrant::FalseNegative,
            (false, false) => Quadrant::TrueNegative,
        }
    }

    pub fn abbreviation(self) -> &'static str {
        match self {
            Quadrant::TruePositive => "TP",
            Quadrant::FalsePositive => "FP",
            Quadrant::FalseNegative => "FN",
            Quadrant::TrueNegative => "TN",
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

/// Labels `doc` against `threshold`. A document is predicted positive only when
/// its score is strictly greater than the threshold.
pub fn quadrant(doc: &Document, threshold: f64) -> Result<Quadrant> {
    let score = doc
        .score
        .ok_or_else(|| AuditError::MissingScore(doc.id.clone()))?;
    Ok(Quadrant::from_outcome(
        score > threshold,
        doc.gold_label.is_abusive(),
    ))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadrantCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl QuadrantCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    fn add(&mut self, q: Quadrant) {
        match q {
            Quadrant::TruePositive => self.tp += 1,
            Quadrant::FalsePositive => self.fp += 1,
            Quadrant::FalseNegative => self.fn_ += 1,
            Quadrant::TrueNegative => self.tn += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(format!("unknown corpus format {other:?}")),
        }
    }
}

impl CorpusFormat {
    /// Guesses the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

/// On-disk record shape. Enums stay as strings so that bad values become
/// record-level validation errors instead of opaque parse failures.
#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    score: Option<f64>,
    gold_label: String,
    sample_source: String,
    split: String,
}

impl RawRecord {
    fn into_document(self) -> Result<Document> {
        let invalid = |id: &str, message: String| AuditError::InvalidRecord {
            id: id.to_string(),
            message,
        };
        let gold_label = self.gold_label.parse().map_err(|m| invalid(&self.id, m))?;
        let sample_source = self
            .sample_source
            .parse()
            .map_err(|m| invalid(&self.id, m))?;
        let split = self.split.parse().map_err(|m| invalid(&self.id, m))?;
        let doc = Document {
            id: self.id,
            text: self.text,
            score: self.score,
            gold_label,
            sample_source,
            split,
        };
        doc.validate()?;
        Ok(doc)
    }
}

/// An immutable, id-unique collection of documents in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in &docs {
            doc.validate()?;
            if !seen.insert(doc.id.as_str()) {
                return Err(AuditError::DuplicateId(doc.id.clone()));
            }
        }
        Ok(Self { docs })
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.docs
    }

    /// Builds a corpus from a subset of this one, keeping input order.
    pub fn filter(&self, mut keep: impl FnMut(&Document) -> bool) -> Corpus {
        Corpus {
            docs: self.docs.iter().filter(|d| keep(d)).cloned().collect(),
        }
    }

    pub fn quadrant_counts(&self, threshold: f64) -> Result<QuadrantCounts> {
        let mut counts = QuadrantCounts::default();
        for doc in &self.docs {
            counts.add(quadrant(doc, threshold)?);
        }
        Ok(counts)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for doc in &self.docs {
            let line =
                serde_json::to_string(doc).map_err(|e| AuditError::Serialization(e.to_string()))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), self.to_jsonl()?.as_bytes())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let ser = |e: csv::Error| AuditError::Serialization(e.to_string());
        let mut writer = csv::Writer::from_writer(Vec::new());
        for doc in &self.docs {
            writer.serialize(doc).map_err(ser)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| AuditError::Serialization(e.to_string()))?;
        write_file(path.as_ref(), &bytes)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

/// Reads a corpus file. Records keep file order; ids must be unique.
pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<Corpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| AuditError::io(path, e))?;
    let docs = match format {
        CorpusFormat::Jsonl => read_jsonl(path, BufReader::new(file))?,
        CorpusFormat::Csv => read_csv(path, file)?,
    };
    Corpus::new(docs)
}

fn read_jsonl(path: &Path, reader: impl BufRead) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AuditError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| AuditError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(raw.into_document()?);
    }
    Ok(docs)
}

fn read_csv(path: &Path, reader: impl std::io::Read) -> Result<Vec<Document>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut docs = Vec::new();
    for record in rdr.deserialize::<RawRecord>() {
        let raw = record.map_err(|e| AuditError::Parse {
            path: path.to_path_buf(),
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        docs.push(raw.into_document()?);
    }
    Ok(docs)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| AuditError::io(parent, e))?;
        }
    }
    let mut file = fs::File::create(path).map_err(|e| AuditError::io(path, e))?;
    file.write_all(contents)
        .map_err(|e| AuditError::io(path, e))
}
