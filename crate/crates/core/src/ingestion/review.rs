//! Review file listing every verdict for human inspection, and its re-import.

use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use super::IngestionError;
use crate::language::Language;
use crate::matching::Lemmatizer;
use crate::vocabulary::category::{join_display, parse_list};
use crate::vocabulary::{build_index, IdentityCharacteristic, Vocabulary, VocabularyEntry, VocabularyError};

pub const REVIEW_HEADER: [&str; 6] = ["term", "hate_speech", "categories", "vocabulary_entry", "reasoning", "error"];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReviewRow {
    pub term: String,
    /// `None` when the candidate errored.
    pub hate_speech: Option<bool>,
    pub categories: Vec<IdentityCharacteristic>,
    pub vocabulary_entry: String,
    pub reasoning: String,
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRow {
    term: String,
    hate_speech: String,
    categories: String,
    vocabulary_entry: String,
    reasoning: String,
    error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReviewReport {
    pub rows: Vec<ReviewRow>,
}

impl ReviewReport {
    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.hate_speech == Some(true)).count()
    }

    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| !r.error.is_empty()).count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), IngestionError> {
        let mut w = csv::Writer::from_path(path).map_err(|e| IngestionError::Review(e.to_string()))?;
        for r in &self.rows {
            w.serialize(RawRow {
                term: r.term.clone(),
                hate_speech: r.hate_speech.map(|b| b.to_string()).unwrap_or_default(),
                categories: join_display(&r.categories),
                vocabulary_entry: r.vocabulary_entry.clone(),
                reasoning: r.reasoning.clone(),
                error: r.error.clone(),
            })
            .map_err(|e| IngestionError::Review(e.to_string()))?;
        }
        if self.rows.is_empty() {
            w.write_record(REVIEW_HEADER).map_err(|e| IngestionError::Review(e.to_string()))?;
        }
        w.flush().map_err(|e| IngestionError::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self, IngestionError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| IngestionError::Review(e.to_string()))?;
        let header = r.headers().map_err(|e| IngestionError::Review(e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != REVIEW_HEADER {
            return Err(IngestionError::Review(format!("expected header {}", REVIEW_HEADER.join(","))));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.deserialize::<RawRow>().enumerate() {
            let row = i + 1;
            let raw = rec.map_err(|e| IngestionError::Review(format!("row {row}: {e}")))?;
            let hate_speech = match raw.hate_speech.trim().to_ascii_lowercase().as_str() {
                "" => None,
                "true" | "yes" | "1" => Some(true),
                "false" | "no" | "0" => Some(false),
                other => return Err(IngestionError::Review(format!("row {row}: hate_speech {other:?}"))),
            };
            let categories =
                parse_list(&raw.categories).map_err(|e| IngestionError::Review(format!("row {row}: {e}")))?;
            rows.push(ReviewRow {
                term: raw.term.trim().to_string(),
                hate_speech,
                categories,
                vocabulary_entry: raw.vocabulary_entry.trim().to_string(),
                reasoning: raw.reasoning,
                error: raw.error.trim().to_string(),
            });
        }
        Ok(Self { rows })
    }
}

/// Canonical page URL of a term.
pub fn source_url(language: Language, term: &str) -> String {
    let mut url = Url::parse(&format!("https://{}.wiktionary.org/wiki/", language.tag())).expect("static base");
    url.path_segments_mut()
        .expect("base has path")
        .pop_if_empty()
        .push(&term.replace(' ', "_"));
    url.to_string()
}

/// Vocabulary entry for an accepted review row.
pub fn entry_from_row(row: &ReviewRow, language: Language) -> VocabularyEntry {
    VocabularyEntry {
        term: row.term.clone(),
        description: row.vocabulary_entry.clone(),
        categories: row.categories.clone(),
        source: source_url(language, &row.term),
        language,
    }
}

/// Builds a vocabulary from the rows marked `hate_speech=true` without an error.
pub fn import_review(
    report: &ReviewReport,
    language: Language,
    lemmatizer: &dyn Lemmatizer,
) -> Result<Vocabulary, VocabularyError> {
    let entries = report
        .rows
        .iter()
        .filter(|r| r.hate_speech == Some(true) && r.error.is_empty())
        .map(|r| entry_from_row(r, language))
        .collect();
    build_index(entries, lemmatizer)
}
