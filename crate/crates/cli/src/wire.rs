//! JSON shapes shared by the CLI and the service. See `schema/wire.schema.json`.

use detox_core::pipelines::default_text_id;
use detox_core::{IdentityCharacteristic, ResultRecord, TermMatch};
use serde::{Deserialize, Serialize};

/// One detection request, also the line format of `detect --input`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectRequest {
    #[serde(default)]
    pub id: Option<String>,
    pub text: String,
    #[serde(default)]
    pub language: Option<String>,
}

impl DetectRequest {
    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| default_text_id(&self.text))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchView {
    pub term: String,
    pub surface: String,
    pub start: usize,
    pub end: usize,
    pub distance: usize,
    pub categories: Vec<IdentityCharacteristic>,
    pub description: String,
}

impl From<&TermMatch> for MatchView {
    fn from(m: &TermMatch) -> Self {
        Self {
            term: m.entry.term.clone(),
            surface: m.surface.clone(),
            start: m.start,
            end: m.end,
            distance: m.distance,
            categories: m.entry.categories.clone(),
            description: m.entry.description.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResponse {
    pub id: String,
    pub matches: Vec<MatchView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub vocabulary_size: usize,
    pub provider: String,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

/// Serializes a record as one JSON line without the trailing newline.
pub fn render_record(record: &ResultRecord, explain_only_positive: bool) -> String {
    if explain_only_positive && record.explanation.is_empty() {
        let mut value = serde_json::to_value(record).expect("record serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("explanation");
        }
        return serde_json::to_string(&value).expect("record serializes");
    }
    serde_json::to_string(record).expect("record serializes")
}

/// Error record for input that never reached the detector.
pub fn input_error_record(id: String, message: String) -> ResultRecord {
    ResultRecord {
        id,
        label: None,
        explanation: String::new(),
        provenance: None,
        matches: Vec::new(),
        errors: vec![message],
        warnings: Vec::new(),
    }
}
