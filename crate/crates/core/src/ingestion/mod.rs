//! Vocabulary construction from Wiktionary: candidate collection, definition
//! extraction, model-assisted assessment and the human review round trip.

pub mod api;
mod assess;
pub mod cache;
pub mod definitions;
mod pipeline;
pub mod review;
mod source;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use api::{
    fetch_category_members, fetch_linkhere_members, fetch_page, fetch_source_members, ApiTransport,
    FixtureTransport, HttpTransport, Member, RecordedCall,
};
pub use assess::{assess_candidate, format_definitions, AssessError, CandidateVerdict};
pub use cache::{CachedProvider, DiskCache};
pub use definitions::{parse_definitions, SectionConfig};
pub use pipeline::{build_vocabulary_from_candidates, collect_candidates, CandidateSet, CollectOptions};
pub use review::{import_review, ReviewReport, ReviewRow};
pub use source::{category_prefix, default_sources, CategorySource, SourceKind};

#[derive(Debug, Error)]
pub enum IngestionError {
    #[error("network error: {0}")]
    Network(String),
    #[error("API error {code}: {message}")]
    Api { code: String, message: String },
    #[error("page size {0} outside [1, 500]")]
    InvalidPageSize(u32),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("review file: {0}")]
    Review(String),
}

impl IngestionError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

/// A page collected from one or more sources, with its extracted definitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermCandidate {
    pub term: String,
    pub page_id: u64,
    pub definitions: Vec<String>,
    pub sources: BTreeSet<CategorySource>,
}
