//! Inputs shared by the benchmarks.

use detox_core::evaluation::{AnnotationRecord, RaterLabel};
use detox_core::vocabulary::{build_index, IdentityCharacteristic, VocabularyEntry};
use detox_core::{Language, Lemmatizer, Vocabulary};

/// `n` single and two-word entries built from a fixed stem list.
pub fn vocabulary(n: usize, lemmatizer: &dyn Lemmatizer) -> Vocabulary {
    const STEMS: &[&str] = &["zorb", "kavit", "plen", "drumak", "velt", "quon", "brisk", "tamul", "fenn", "gorp"];
    let entries = (0..n)
        .map(|i| {
            let a = STEMS[i % STEMS.len()];
            let term = if i < STEMS.len() { a.to_string() } else { format!("{a} {}{}", STEMS[(i / STEMS.len()) % STEMS.len()], i) };
            VocabularyEntry {
                term,
                description: "benchmark entry".into(),
                categories: vec![IdentityCharacteristic::Other],
                source: "https://en.wiktionary.org/wiki/x".into(),
                language: lemmatizer.language(),
            }
        })
        .collect();
    build_index(entries, lemmatizer).expect("benchmark vocabulary")
}

/// A text of `words` tokens with a vocabulary stem every seventh word.
pub fn text(words: usize) -> String {
    const FILLER: &[&str] = &["the", "people", "quickly", "walked", "under", "old", "bridges", "and"];
    (0..words)
        .map(|i| if i % 7 == 3 { "gorps" } else { FILLER[i % FILLER.len()] })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Deterministic annotation records cycling through the label space.
pub fn annotations(n: usize) -> Vec<AnnotationRecord> {
    let l = RaterLabel::ALL;
    (0..n)
        .map(|i| AnnotationRecord {
            id: i.to_string(),
            text: String::new(),
            language: Language::En,
            labels: [l[i % 3], l[(i / 3) % 3], l[(i / 9) % 3]],
            original_label: None,
        })
        .collect()
}
