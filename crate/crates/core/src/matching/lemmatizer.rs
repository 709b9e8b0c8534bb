//! Tokenization and lemmatization.
//!
//! The matcher only depends on the [`Lemmatizer`] trait. The shipped
//! [`DefaultLemmatizer`] is a small rule-based analyzer driven by plain-text
//! tables under `data/lemmatizer/<lang>/`; production deployments can plug a
//! real morphological analyzer through [`SubprocessLemmatizer`].

use std::collections::HashMap;
use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::Language;
use crate::text::{char_slice, fold};

/// One token of an analyzed text. Offsets count Unicode scalar values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Error)]
pub enum LemmatizerError {
    #[error("unsupported language for lemmatizer: {0}")]
    UnsupportedLanguage(String),
    #[error("invalid token stream: {0}")]
    InvalidTokens(String),
    #[error("external lemmatizer failed: {0}")]
    External(String),
    #[error("malformed rule table {file} line {line}: {reason}")]
    RuleTable {
        file: String,
        line: usize,
        reason: String,
    },
}

pub trait Lemmatizer: Send + Sync {
    fn language(&self) -> Language;

    /// Tokens ordered by start offset, non-overlapping, each within `text`.
    fn analyze(&self, text: &str) -> Result<Vec<Token>, LemmatizerError>;
}

/// Checks the token-stream contract against the analyzed text.
pub fn validate_tokens(text: &str, tokens: &[Token]) -> Result<(), LemmatizerError> {
    let len = text.chars().count();
    let mut prev_end = 0;
    for (i, t) in tokens.iter().enumerate() {
        let bad = |reason: &str| Err(LemmatizerError::InvalidTokens(format!("token {i}: {reason}")));
        if t.start >= t.end {
            return bad("empty span");
        }
        if t.end > len {
            return bad("span exceeds input");
        }
        if t.start < prev_end {
            return bad("overlaps or precedes previous token");
        }
        if t.lemma.is_empty() {
            return bad("empty lemma");
        }
        if char_slice(text, t.start, t.end) != t.surface {
            return bad("surface differs from input slice");
        }
        prev_end = t.end;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Apostrophe {
    /// `don't` stays one token.
    Keep,
    /// `l'ami` becomes `l'` + `ami`.
    Elision,
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02BC}')
}

/// Splits on whitespace and punctuation. Returns `(start, end)` char spans.
fn tokenize(text: &str, apostrophe: Apostrophe) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
            continue;
        }
        let inside_word = is_apostrophe(c)
            && start.is_some()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if let Some(s) = start {
            if inside_word {
                match apostrophe {
                    Apostrophe::Keep => continue,
                    Apostrophe::Elision => {
                        spans.push((s, i + 1));
                        start = None;
                        continue;
                    }
                }
            }
            spans.push((s, i));
            start = None;
        }
    }
    if let Some(s) = start {
        spans.push((s, chars.len()));
    }
    spans
}

#[derive(Debug, Clone)]
struct RuleSet {
    exceptions: HashMap<String, String>,
    suffixes: Vec<(String, String)>,
}

/// Minimum number of characters a suffix rule must leave in place.
const MIN_STEM: usize = 2;

impl RuleSet {
    fn parse(suffixes: &str, exceptions: &str, lang: Language) -> Result<Self, LemmatizerError> {
        let rows = |src: &str, file: &str| -> Result<Vec<(String, String)>, LemmatizerError> {
            let mut out = Vec::new();
            for (n, line) in src.lines().enumerate() {
                if line.trim().is_empty() || line.starts_with('#') {
                    continue;
                }
                let (a, b) = line.split_once('\t').ok_or_else(|| LemmatizerError::RuleTable {
                    file: format!("{lang}/{file}"),
                    line: n + 1,
                    reason: "missing tab separator".into(),
                })?;
                out.push((fold(a.trim()), fold(b.trim())));
            }
            Ok(out)
        };
        Ok(Self {
            suffixes: rows(suffixes, "suffixes.tsv")?,
            exceptions: rows(exceptions, "exceptions.tsv")?.into_iter().collect(),
        })
    }

    fn lemma(&self, surface: &str) -> String {
        let word = fold(surface);
        if let Some(l) = self.exceptions.get(&word) {
            return l.clone();
        }
        let n = word.chars().count();
        for (suffix, replacement) in &self.suffixes {
            let k = suffix.chars().count();
            if word.ends_with(suffix.as_str()) && n >= k + MIN_STEM {
                let stem = &word[..word.len() - suffix.len()];
                return format!("{stem}{replacement}");
            }
        }
        word
    }
}

/// Deterministic rule-table lemmatizer for `en`, `fr` and `el`.
#[derive(Debug, Clone)]
pub struct DefaultLemmatizer {
    language: Language,
    apostrophe: Apostrophe,
    rules: RuleSet,
}

impl DefaultLemmatizer {
    pub fn new(language: Language) -> Result<Self, LemmatizerError> {
        let (suffixes, exceptions) = match language {
            Language::En => (
                include_str!("../../data/lemmatizer/en/suffixes.tsv"),
                include_str!("../../data/lemmatizer/en/exceptions.tsv"),
            ),
            Language::Fr => (
                include_str!("../../data/lemmatizer/fr/suffixes.tsv"),
                include_str!("../../data/lemmatizer/fr/exceptions.tsv"),
            ),
            Language::El => (
                include_str!("../../data/lemmatizer/el/suffixes.tsv"),
                include_str!("../../data/lemmatizer/el/exceptions.tsv"),
            ),
        };
        Self::from_tables(language, suffixes, exceptions)
    }

    /// Builds a lemmatizer from caller-supplied tables in the shipped TSV format.
    pub fn from_tables(
        language: Language,
        suffixes: &str,
        exceptions: &str,
    ) -> Result<Self, LemmatizerError> {
        let apostrophe = match language {
            Language::Fr => Apostrophe::Elision,
            Language::En | Language::El => Apostrophe::Keep,
        };
        Ok(Self {
            language,
            apostrophe,
            rules: RuleSet::parse(suffixes, exceptions, language)?,
        })
    }

    pub fn lemma_of(&self, word: &str) -> String {
        self.rules.lemma(word)
    }
}

/// Returns the shipped lemmatizer for a language tag.
pub fn default_lemmatizer(language: &str) -> Result<DefaultLemmatizer, LemmatizerError> {
    let lang: Language = language
        .parse()
        .map_err(|_| LemmatizerError::UnsupportedLanguage(language.to_string()))?;
    DefaultLemmatizer::new(lang)
}

impl Lemmatizer for DefaultLemmatizer {
    fn language(&self) -> Language {
        self.language
    }

    fn analyze(&self, text: &str) -> Result<Vec<Token>, LemmatizerError> {
        Ok(tokenize(text, self.apostrophe)
            .into_iter()
            .map(|(start, end)| {
                let surface = char_slice(text, start, end).to_string();
                let lemma = self.rules.lemma(&surface);
                Token { surface, lemma, start, end }
            })
            .collect())
    }
}

/// Same tokenization as the default lemmatizer, lemma = lowercase surface.
#[derive(Debug, Clone, Copy)]
pub struct IdentityLemmatizer {
    language: Language,
}

impl IdentityLemmatizer {
    pub fn new(language: Language) -> Self {
        Self { language }
    }
}

impl Lemmatizer for IdentityLemmatizer {
    fn language(&self) -> Language {
        self.language
    }

    fn analyze(&self, text: &str) -> Result<Vec<Token>, LemmatizerError> {
        Ok(tokenize(text, Apostrophe::Keep)
            .into_iter()
            .map(|(start, end)| {
                let surface = char_slice(text, start, end).to_string();
                Token { lemma: fold(&surface), surface, start, end }
            })
            .collect())
    }
}

/// Runs an external analyzer per call: the text is written to stdin and a JSON
/// array of `{surface, lemma, start, end}` objects is expected on stdout.
#[derive(Debug, Clone)]
pub struct SubprocessLemmatizer {
    language: Language,
    program: String,
    args: Vec<String>,
}

impl SubprocessLemmatizer {
    pub fn new(language: Language, command: &[String]) -> Result<Self, LemmatizerError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| LemmatizerError::External("empty command".into()))?;
        Ok(Self {
            language,
            program: program.clone(),
            args: args.to_vec(),
        })
    }
}

impl Lemmatizer for SubprocessLemmatizer {
    fn language(&self) -> Language {
        self.language
    }

    fn analyze(&self, text: &str) -> Result<Vec<Token>, LemmatizerError> {
        let ext = |e: std::io::Error| LemmatizerError::External(format!("{}: {e}", self.program));
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .env("DETOX_LANGUAGE", self.language.tag())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(ext)?;
        child
            .stdin
            .take()
            .expect("stdin is piped")
            .write_all(text.as_bytes())
            .map_err(ext)?;
        let output = child.wait_with_output().map_err(ext)?;
        if !output.status.success() {
            return Err(LemmatizerError::External(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let mut tokens: Vec<Token> = serde_json::from_slice(&output.stdout)
            .map_err(|e| LemmatizerError::External(format!("unparseable output: {e}")))?;
        for t in &mut tokens {
            t.lemma = fold(&t.lemma);
        }
        validate_tokens(text, &tokens)?;
        Ok(tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lemmas(l: &dyn Lemmatizer, text: &str) -> Vec<String> {
        l.analyze(text).unwrap().into_iter().map(|t| t.lemma).collect()
    }

    #[test]
    fn english_plural_and_case() {
        let en = default_lemmatizer("en").unwrap();
        assert_eq!(en.lemma_of("dogs"), "dog");
        assert_eq!(en.lemma_of("Dog"), "dog");
        assert_eq!(en.lemma_of("queens"), "queen");
        assert_eq!(en.lemma_of("bitches"), "bitch");
        assert_eq!(en.lemma_of("ladies"), "lady");
        assert_eq!(en.lemma_of("class"), "class");
        assert_eq!(en.lemma_of("running"), "run");
        // suffix rule must leave a stem of at least two characters
        assert_eq!(en.lemma_of("as"), "as");
    }

    #[test]
    fn greek_rules_and_exceptions() {
        let el = default_lemmatizer("el").unwrap();
        assert_eq!(el.lemma_of("αδελφές"), "αδελφή");
        assert_eq!(el.lemma_of("ΑΔΕΛΦΈΣ"), "αδελφή");
        assert_eq!(el.lemma_of("πούστηδες"), "πούστης");
    }

    #[test]
    fn unsupported_language() {
        assert!(matches!(
            default_lemmatizer("de"),
            Err(LemmatizerError::UnsupportedLanguage(_))
        ));
    }

    #[test]
    fn english_keeps_inner_apostrophe() {
        let en = default_lemmatizer("en").unwrap();
        let toks = en.analyze("don't be such a sissy!").unwrap();
        let surfaces: Vec<&str> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["don't", "be", "such", "a", "sissy"]);
        assert_eq!((toks[4].start, toks[4].end), (16, 21));
        validate_tokens("don't be such a sissy!", &toks).unwrap();
    }

    #[test]
    fn french_splits_elision() {
        let fr = default_lemmatizer("fr").unwrap();
        let toks = fr.analyze("l'ami des gros").unwrap();
        let surfaces: Vec<&str> = toks.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["l'", "ami", "des", "gros"]);
        assert_eq!(toks[0].lemma, "le");
        assert_eq!(toks[3].lemma, "gros");
    }

    #[test]
    fn trailing_apostrophe_is_punctuation() {
        let en = default_lemmatizer("en").unwrap();
        assert_eq!(lemmas(&en, "the dogs' bowl"), ["the", "dog", "bowl"]);
    }

    #[test]
    fn hyphen_splits_tokens() {
        let id = IdentityLemmatizer::new(Language::En);
        assert_eq!(lemmas(&id, "half-breed"), ["half", "breed"]);
    }

    #[test]
    fn offsets_are_character_based() {
        let el = default_lemmatizer("el").unwrap();
        let text = "Οι αδελφές ήρθαν";
        let toks = el.analyze(text).unwrap();
        assert_eq!(toks[1].surface, "αδελφές");
        assert_eq!((toks[1].start, toks[1].end), (3, 10));
        validate_tokens(text, &toks).unwrap();
    }

    #[test]
    fn validation_rejects_bad_streams() {
        let t = |s: &str, l: &str, a, b| Token { surface: s.into(), lemma: l.into(), start: a, end: b };
        assert!(validate_tokens("ab cd", &[t("cd", "cd", 3, 5), t("ab", "ab", 0, 2)]).is_err());
        assert!(validate_tokens("ab cd", &[t("ab", "", 0, 2)]).is_err());
        assert!(validate_tokens("ab cd", &[t("xx", "xx", 0, 2)]).is_err());
        assert!(validate_tokens("ab", &[t("ab", "ab", 0, 3)]).is_err());
    }

    #[test]
    fn rejects_table_without_tab() {
        let err = DefaultLemmatizer::from_tables(Language::En, "s\n", "").unwrap_err();
        assert!(matches!(err, LemmatizerError::RuleTable { line: 1, .. }));
    }
}
