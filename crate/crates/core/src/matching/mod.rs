//! Vocabulary term spotting over lemmatized text.
//!
//! Every contiguous token window whose lemma sequence is a vocabulary key is a
//! candidate. Overlapping candidates are resolved by keeping the longest
//! character span (earliest start on ties). When several entries share the
//! matched key, the one whose term is closest to the surface text by edit
//! distance wins, with file order breaking ties.

pub mod lemmatizer;
pub mod levenshtein;

use serde::Serialize;
use thiserror::Error;

pub use lemmatizer::{default_lemmatizer, DefaultLemmatizer, IdentityLemmatizer, Lemmatizer, Token};
pub use levenshtein::levenshtein;

use crate::language::Language;
use crate::text::{char_slice, fold, key_form};
use crate::vocabulary::{Vocabulary, VocabularyEntry};
use lemmatizer::LemmatizerError;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("vocabulary is {vocabulary} but lemmatizer is {lemmatizer}")]
    LanguageMismatch {
        vocabulary: Language,
        lemmatizer: Language,
    },
    #[error(transparent)]
    Lemmatizer(#[from] LemmatizerError),
}

/// A vocabulary term located in a text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermMatch {
    /// Position of the entry in the vocabulary.
    pub entry_index: usize,
    pub entry: VocabularyEntry,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub lemma_key: Vec<String>,
    pub distance: usize,
}

impl TermMatch {
    pub fn span_len(&self) -> usize {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    first: usize,
    last: usize,
    start: usize,
    end: usize,
}

pub fn find_matches(
    text: &str,
    vocab: &Vocabulary,
    lemmatizer: &dyn Lemmatizer,
) -> Result<Vec<TermMatch>, MatchError> {
    if vocab.language() != lemmatizer.language() {
        return Err(MatchError::LanguageMismatch {
            vocabulary: vocab.language(),
            lemmatizer: lemmatizer.language(),
        });
    }
    if vocab.is_empty() {
        return Ok(Vec::new());
    }
    let tokens = lemmatizer.analyze(text)?;
    let keys: Vec<String> = tokens.iter().map(|t| key_form(&t.lemma)).collect();

    let mut candidates = Vec::new();
    for first in 0..tokens.len() {
        let longest = vocab.max_key_len().min(tokens.len() - first);
        for len in 1..=longest {
            let last = first + len - 1;
            if !vocab.lookup(&keys[first..=last]).is_empty() {
                candidates.push(Candidate {
                    first,
                    last,
                    start: tokens[first].start,
                    end: tokens[last].end,
                });
            }
        }
    }

    candidates.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
    });
    let mut kept: Vec<Candidate> = Vec::new();
    for c in candidates {
        if kept.iter().all(|k| c.end <= k.start || k.end <= c.start) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|c| c.start);

    Ok(kept
        .into_iter()
        .map(|c| {
            let lemma_key = keys[c.first..=c.last].to_vec();
            let surface = char_slice(text, c.start, c.end).to_string();
            let folded = fold(&surface);
            let (entry_index, distance) = vocab
                .lookup(&lemma_key)
                .iter()
                .map(|&i| (i, levenshtein(&folded, &fold(&vocab.entries()[i].term))))
                .min_by_key(|&(i, d)| (d, i))
                .expect("candidate keys are non-empty in the index");
            TermMatch {
                entry_index,
                entry: vocab.entries()[entry_index].clone(),
                start: c.start,
                end: c.end,
                surface,
                lemma_key,
                distance,
            }
        })
        .collect())
}
