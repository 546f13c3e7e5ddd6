use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{AuditError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    id: String,
    score: f64,
}

/// Model scores keyed by document id, as read from an `id,score` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreMap {
    order: Vec<String>,
    scores: HashMap<String, f64>,
}

impl ScoreMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, score: f64) -> Result<()> {
        let id = id.into();
        if !(0.0..=1.0).contains(&score) {
            return Err(AuditError::InvalidRecord {
                id,
                message: format!("score {score} outside [0, 1]"),
            });
        }
        if self.scores.insert(id.clone(), score).is_some() {
            return Err(AuditError::DuplicateId(id));
        }
        self.order.push(id);
        Ok(())
    }

    /// Collects the `score` field of every scored document.
    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        let mut map = Self::new();
        for doc in corpus {
            if let Some(s) = doc.score {
                map.insert(doc.id.clone(), s)?;
            }
        }
        Ok(map)
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Entries in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.order.iter().map(|id| (id.as_str(), self.scores[id]))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| AuditError::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: e.to_string(),
            })?;
        let mut map = Self::new();
        for row in rdr.deserialize::<ScoreRow>() {
            let row = row.map_err(|e| AuditError::Parse {
                path: path.to_path_buf(),
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
            map.insert(row.id, row.score)?;
        }
        Ok(map)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (id, score) in self.iter() {
            w.serialize(ScoreRow {
                id: id.to_string(),
                score,
            })
            .map_err(|e| AuditError::Serialization(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| AuditError::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| AuditError::Serialization(e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        super::write_file(path.as_ref(), self.to_csv()?.as_bytes())
    }
}
