//! Annotation resolution, detection metrics and inter-rater agreement.

mod alpha;
mod metrics;
pub mod report;
mod resolve;

use std::fmt;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alpha::{krippendorff_alpha, krippendorff_alpha_units};
pub use metrics::{agreement_rate, compute_metrics, f1_score, positive_rate, MetricsReport};
pub use report::{evaluate, EvaluationReport, LanguageReport, VariantReport};
pub use resolve::{
    is_borderline, resolve, resolve_dataset, resolve_majority, resolve_permissive, resolve_safe,
    resolve_strict, ResolvedDataset, Variant, VariantRule,
};

use crate::language::Language;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("prediction ids do not align with the dataset: {0}")]
    IdMismatch(String),
    #[error("not enough pairable ratings for agreement")]
    InsufficientData,
    #[error("item {0} has no original label")]
    MissingOriginalLabel(String),
    #[error("dataset has no resolved items")]
    EmptyDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RaterLabel {
    Yes,
    Unsure,
    No,
}

impl RaterLabel {
    pub const ALL: [Self; 3] = [Self::Yes, Self::Unsure, Self::No];

    /// Interval coding.
    pub fn value(self) -> f64 {
        match self {
            Self::Yes => 1.0,
            Self::Unsure => 0.5,
            Self::No => 0.0,
        }
    }
}

impl fmt::Display for RaterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Yes => "Yes",
            Self::Unsure => "Unsure",
            Self::No => "No",
        })
    }
}

impl FromStr for RaterLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" => Ok(Self::Yes),
            "unsure" | "u" => Ok(Self::Unsure),
            "no" | "n" => Ok(Self::No),
            _ => Err(format!("unknown rater label {s:?}")),
        }
    }
}

/// One annotated text with its three rater labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub id: String,
    pub text: String,
    pub language: Language,
    pub labels: [RaterLabel; 3],
    #[serde(default)]
    pub original_label: Option<bool>,
}

/// Reads a JSON-lines annotation file. Blank lines are skipped.
pub fn load_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, EvaluationError> {
    let file = std::fs::File::open(path).map_err(|source| EvaluationError::Io { path: path.into(), source })?;
    read_annotations(std::io::BufReader::new(file))
        .map_err(|e| match e {
            EvaluationError::Io { source, .. } => EvaluationError::Io { path: path.into(), source },
            other => other,
        })
}

pub fn read_annotations(reader: impl BufRead) -> Result<Vec<AnnotationRecord>, EvaluationError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| EvaluationError::Io { path: PathBuf::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AnnotationRecord = serde_json::from_str(&line)
            .map_err(|e| EvaluationError::Format { line: i + 1, reason: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_coding() {
        assert_eq!(RaterLabel::ALL.map(RaterLabel::value), [1.0, 0.5, 0.0]);
        assert_eq!("UNSURE".parse::<RaterLabel>(), Ok(RaterLabel::Unsure));
        assert!("maybe".parse::<RaterLabel>().is_err());
    }

    #[test]
    fn reads_jsonl() {
        let data = r#"{"id":"1","text":"a","language":"en","labels":["Yes","No","Unsure"],"original_label":true}

{"id":"2","text":"b","language":"el","labels":["No","No","No"]}
"#;
        let recs = read_annotations(data.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].labels, [RaterLabel::Yes, RaterLabel::No, RaterLabel::Unsure]);
        assert_eq!(recs[1].original_label, None);
        assert_eq!(recs[1].language, Language::El);
    }

    #[test]
    fn wrong_label_count_is_rejected() {
        let data = r#"{"id":"1","text":"a","language":"en","labels":["Yes","No"]}"#;
        assert!(matches!(
            read_annotations(data.as_bytes()),
            Err(EvaluationError::Format { line: 1, .. })
        ));
    }
}
