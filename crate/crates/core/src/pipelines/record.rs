//! JSON-lines result records shared by the CLI and the service.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DetectionResult, ItemError, Provenance};
use crate::vocabulary::IdentityCharacteristic;

/// Id given to texts submitted without one: the first 16 hex digits of their SHA-256.
pub fn default_text_id(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub term: String,
    pub start: usize,
    pub end: usize,
    pub categories: Vec<IdentityCharacteristic>,
    /// `None` when disambiguation failed for this term.
    pub hateful: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    /// `None` for errored items.
    pub label: Option<bool>,
    pub explanation: String,
    pub provenance: Option<Provenance>,
    pub matches: Vec<MatchRecord>,
    pub errors: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ResultRecord {
    pub fn is_error(&self) -> bool {
        self.label.is_none()
    }

    pub fn from_error(err: &ItemError) -> Self {
        Self {
            id: err.text_id.clone(),
            label: None,
            explanation: String::new(),
            provenance: None,
            matches: Vec::new(),
            errors: vec![err.error.to_string()],
            warnings: Vec::new(),
        }
    }
}

impl From<&DetectionResult> for ResultRecord {
    fn from(r: &DetectionResult) -> Self {
        let hateful_for = |entry_index: usize| {
            r.term_verdicts
                .iter()
                .find(|v| v.matches[0].entry_index == entry_index)
                .map(|v| v.hateful)
        };
        Self {
            id: r.text_id.clone(),
            label: Some(r.label),
            explanation: r.explanation.clone(),
            provenance: Some(r.provenance),
            matches: r
                .matches
                .iter()
                .map(|m| MatchRecord {
                    term: m.entry.term.clone(),
                    start: m.start,
                    end: m.end,
                    categories: m.entry.categories.clone(),
                    hateful: hateful_for(m.entry_index),
                })
                .collect(),
            errors: Vec::new(),
            warnings: r.warnings.clone(),
        }
    }
}

impl From<&Result<DetectionResult, ItemError>> for ResultRecord {
    fn from(r: &Result<DetectionResult, ItemError>) -> Self {
        match r {
            Ok(d) => d.into(),
            Err(e) => Self::from_error(e),
        }
    }
}
