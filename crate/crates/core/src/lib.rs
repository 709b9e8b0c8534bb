//! Hybrid hate-speech detection with vocabulary-grounded explanations.
//!
//! Modules follow the processing flow: [`vocabulary`] loads the curated term
//! lists, [`matching`] spots them in text, [`model`] talks to chat models and
//! parses their structured replies, [`pipelines`] runs term-based and
//! term-free detection and fuses the results, [`evaluation`] scores
//! predictions against multi-rater annotations and [`ingestion`] builds new
//! vocabularies from Wiktionary.

pub mod evaluation;
pub mod ingestion;
pub mod language;
pub mod matching;
pub mod model;
pub mod parallel;
pub mod pipelines;
pub mod text;
pub mod vocabulary;

pub use language::Language;
pub use pipelines::{DetectConfig, DetectionResult, Detector, Provenance, ResultRecord};
pub use matching::{find_matches, Lemmatizer, TermMatch, Token};
pub use vocabulary::{IdentityCharacteristic, Vocabulary, VocabularyEntry};
