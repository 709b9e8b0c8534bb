//! Unicode helpers shared by the lemmatizer, the index and the matcher.

use unicode_normalization::UnicodeNormalization;

/// Lowercase NFC form of `s`.
pub fn fold(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

/// Index key form of a lemma: lowercase NFC with Greek final sigma folded to `σ`.
pub fn key_form(lemma: &str) -> String {
    fold(lemma).replace('ς', "σ")
}

/// Characters `[start, end)` of `s`, counting Unicode scalar values.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let from = indices.nth(start).unwrap_or(s.len());
    let to = if end > start {
        indices.nth(end - start - 1).unwrap_or(s.len())
    } else {
        from
    };
    &s[from..to]
}
