//! Curated vocabulary of inherently derogatory terms.
//!
//! A [`Vocabulary`] holds the entries of one language together with an
//! immutable index from lemma sequences to entries. Files are CSV
//! (`term,description,categories,source`, categories `;`-separated) or
//! JSON-lines (`{term, description, categories: [..], source, language}`).

pub mod category;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use category::IdentityCharacteristic;

use crate::language::Language;
use crate::matching::lemmatizer::{Lemmatizer, LemmatizerError};
use crate::text::key_form;

pub const CSV_HEADER: [&str; 4] = ["term", "description", "categories", "source"];

#[derive(Debug, Error)]
pub enum VocabularyError {
    #[error("vocabulary file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error at row {row}: {reason}")]
    Format { row: usize, reason: String },
    #[error("validation error at row {row}: {rule}")]
    Validation { row: usize, rule: String },
    #[error("lemmatizer produced no tokens for term {term:?}")]
    Lemmatization { term: String },
    #[error("vocabulary language {vocabulary} does not match lemmatizer language {lemmatizer}")]
    LanguageMismatch {
        vocabulary: Language,
        lemmatizer: Language,
    },
    #[error(transparent)]
    Lemmatizer(#[from] LemmatizerError),
}

/// One derogatory term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabularyEntry {
    pub term: String,
    pub description: String,
    pub categories: Vec<IdentityCharacteristic>,
    pub source: String,
    pub language: Language,
}

impl VocabularyEntry {
    /// Checks the entry invariants, returning the violated rule.
    pub fn validate(&self) -> Result<(), String> {
        if self.term.trim().is_empty() {
            return Err("term must be non-empty".into());
        }
        if self.description.trim().is_empty() {
            return Err("description must be non-empty".into());
        }
        if self.categories.is_empty() {
            return Err("categories must contain at least one characteristic".into());
        }
        match url::Url::parse(self.source.trim()) {
            Ok(u) if u.has_host() => Ok(()),
            Ok(_) | Err(_) => Err(format!("source {:?} is not an absolute URL", self.source)),
        }
    }

    fn identity_key(&self) -> (String, Language) {
        (self.term.trim().nfc().collect(), self.language)
    }
}

/// Entries of one language plus the lemma index consumed by the matcher.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    language: Language,
    entries: Vec<VocabularyEntry>,
    index: HashMap<Vec<String>, Vec<usize>>,
    max_key_len: usize,
}

impl Vocabulary {
    pub fn language(&self) -> Language {
        self.language
    }

    pub fn entries(&self) -> &[VocabularyEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry positions stored under a lemma key, in file order.
    pub fn lookup(&self, key: &[String]) -> &[usize] {
        self.index.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn keys(&self) -> impl Iterator<Item = &Vec<String>> {
        self.index.keys()
    }

    /// Longest key, in tokens.
    pub fn max_key_len(&self) -> usize {
        self.max_key_len
    }

    pub fn load(
        path: &Path,
        language: Language,
        lemmatizer: &dyn Lemmatizer,
    ) -> Result<Self, VocabularyError> {
        build_index(load_entries(path, language)?, lemmatizer)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), VocabularyError> {
        write_csv(&self.entries, path)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), VocabularyError> {
        write_jsonl(&self.entries, path)
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.language == other.language && self.entries == other.entries && self.index == other.index
    }
}

/// Lemma key for a term: one lowercase NFC, sigma-folded string per token.
pub fn term_key(term: &str, lemmatizer: &dyn Lemmatizer) -> Result<Vec<String>, VocabularyError> {
    let key: Vec<String> = lemmatizer
        .analyze(term)?
        .iter()
        .map(|t| key_form(&t.lemma))
        .collect();
    if key.is_empty() {
        return Err(VocabularyError::Lemmatization { term: term.to_string() });
    }
    Ok(key)
}

/// Validates entries and keys each one under the lemma sequence of its term.
pub fn build_index(
    entries: Vec<VocabularyEntry>,
    lemmatizer: &dyn Lemmatizer,
) -> Result<Vocabulary, VocabularyError> {
    let language = lemmatizer.language();
    let mut seen = HashSet::new();
    let mut index: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for (i, entry) in entries.iter().enumerate() {
        let row = i + 1;
        if entry.language != language {
            return Err(VocabularyError::LanguageMismatch {
                vocabulary: entry.language,
                lemmatizer: language,
            });
        }
        entry
            .validate()
            .map_err(|rule| VocabularyError::Validation { row, rule })?;
        if !seen.insert(entry.identity_key()) {
            return Err(VocabularyError::Validation {
                row,
                rule: format!("duplicate term {:?}", entry.term),
            });
        }
        index.entry(term_key(&entry.term, lemmatizer)?).or_default().push(i);
    }
    let max_key_len = index.keys().map(Vec::len).max().unwrap_or(0);
    Ok(Vocabulary { language, entries, index, max_key_len })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    JsonLines,
}

impl FileFormat {
    /// Picks the format from the extension, falling back to sniffing the content.
    pub fn detect(path: &Path, content: &str) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => Self::Csv,
            Some("jsonl" | "ndjson" | "json") => Self::JsonLines,
            _ if content.trim_start().starts_with('{') => Self::JsonLines,
            _ => Self::Csv,
        }
    }
}

fn read_file(path: &Path) -> Result<String, VocabularyError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => VocabularyError::FileNotFound(path.to_path_buf()),
        _ => VocabularyError::Io { path: path.to_path_buf(), source: e },
    })
}

/// Reads and validates entries, preserving file order. Rows are numbered from 1,
/// counting data rows (the CSV header is not a row).
pub fn load_entries(path: &Path, language: Language) -> Result<Vec<VocabularyEntry>, VocabularyError> {
    let content = read_file(path)?;
    let entries = parse_entries(&content, FileFormat::detect(path, &content), language)?;
    let mut seen = HashSet::new();
    for (i, e) in entries.iter().enumerate() {
        e.validate()
            .map_err(|rule| VocabularyError::Validation { row: i + 1, rule })?;
        if !seen.insert(e.identity_key()) {
            return Err(VocabularyError::Validation {
                row: i + 1,
                rule: format!("duplicate term {:?}", e.term),
            });
        }
    }
    Ok(entries)
}

pub fn parse_entries(
    content: &str,
    format: FileFormat,
    language: Language,
) -> Result<Vec<VocabularyEntry>, VocabularyError> {
    let content = content.strip_prefix('\u{feff}').unwrap_or(content);
    if content.trim().is_empty() {
        return Ok(Vec::new());
    }
    match format {
        FileFormat::Csv => parse_csv(content, language),
        FileFormat::JsonLines => parse_jsonl(content, language),
    }
}

fn parse_csv(content: &str, language: Language) -> Result<Vec<VocabularyEntry>, VocabularyError> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(content.as_bytes());
    let header = reader.headers().map_err(|e| VocabularyError::Format {
        row: 0,
        reason: e.to_string(),
    })?;
    let found: Vec<String> = header.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if found != CSV_HEADER {
        return Err(VocabularyError::Format {
            row: 0,
            reason: format!("expected header {}, found {}", CSV_HEADER.join(","), found.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| VocabularyError::Format { row, reason: e.to_string() })?;
        let categories = category::parse_list(&record[2])
            .map_err(|e| VocabularyError::Validation { row, rule: e.to_string() })?;
        out.push(VocabularyEntry {
            term: record[0].trim().to_string(),
            description: record[1].trim().to_string(),
            categories,
            source: record[3].trim().to_string(),
            language,
        });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonRow {
    term: String,
    description: String,
    categories: Vec<String>,
    source: String,
    language: Option<String>,
}

fn parse_jsonl(content: &str, language: Language) -> Result<Vec<VocabularyEntry>, VocabularyError> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = i + 1;
        let raw: JsonRow = serde_json::from_str(line)
            .map_err(|e| VocabularyError::Format { row, reason: e.to_string() })?;
        if let Some(tag) = &raw.language {
            let lang: Language = tag
                .parse()
                .map_err(|e: crate::language::UnsupportedLanguage| VocabularyError::Validation {
                    row,
                    rule: e.to_string(),
                })?;
            if lang != language {
                return Err(VocabularyError::Validation {
                    row,
                    rule: format!("row language {lang} differs from vocabulary language {language}"),
                });
            }
        }
        let mut categories = Vec::new();
        for c in &raw.categories {
            let c: IdentityCharacteristic = c
                .parse()
                .map_err(|e: category::UnknownCharacteristic| VocabularyError::Validation {
                    row,
                    rule: e.to_string(),
                })?;
            if !categories.contains(&c) {
                categories.push(c);
            }
        }
        out.push(VocabularyEntry {
            term: raw.term.trim().to_string(),
            description: raw.description.trim().to_string(),
            categories,
            source: raw.source.trim().to_string(),
            language,
        });
    }
    Ok(out)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> VocabularyError + '_ {
    move |source| VocabularyError::Io { path: path.to_path_buf(), source }
}

pub fn write_csv(entries: &[VocabularyEntry], path: &Path) -> Result<(), VocabularyError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let csv_err = |e: csv::Error| VocabularyError::Format { row: 0, reason: e.to_string() };
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for e in entries {
            w.write_record([
                e.term.as_str(),
                e.description.as_str(),
                category::join_display(&e.categories).as_str(),
                e.source.as_str(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(io_err(path))?;
    }
    fs::write(path, buf).map_err(io_err(path))
}

pub fn write_jsonl(entries: &[VocabularyEntry], path: &Path) -> Result<(), VocabularyError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    for e in entries {
        let line = serde_json::to_string(e).expect("entries serialize");
        writeln!(f, "{line}").map_err(io_err(path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::lemmatizer::{DefaultLemmatizer, IdentityLemmatizer, Token};
    use std::collections::BTreeMap;

    const BITCH_DESCRIPTION: &str = "The term 'bitch' is primarily offensive when used to refer to women in a derogatory manner, implying they are aggressive, unpleasant, or overly assertive—traits that would often be viewed positively in men. It's also problematic when applied to men to suggest weakness or effeminacy, as this usage reinforces harmful gender stereotypes by equating femininity with inferiority. While the word has a neutral meaning when referring to female dogs, its use as a slur has overshadowed this definition in most contexts. In some LGBTQ+ communities and among close friends, the term has been reclaimed and may be used affectionately, but this usage is context-dependent and generally inappropriate for those outside these communities. The term's evolution from canine terminology to gendered insult reflects long-standing societal attitudes that devalue women and feminine characteristics.";

    fn entry(term: &str) -> VocabularyEntry {
        VocabularyEntry {
            term: term.into(),
            description: format!("about {term}"),
            categories: vec![IdentityCharacteristic::Gender],
            source: format!("https://en.wiktionary.org/wiki/{}", term.replace(' ', "_")),
            language: Language::En,
        }
    }

    fn tmp(name: &str, content: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        fs::write(&p, content).unwrap();
        (dir, p)
    }

    #[test]
    fn loads_sample_entry_with_two_categories() {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(CSV_HEADER).unwrap();
            w.write_record(["bitch", BITCH_DESCRIPTION, "Gender; Sexual Orientation", "https://en.wiktionary.org/wiki/bitch"])
                .unwrap();
        }
        let (_d, p) = tmp("v.csv", std::str::from_utf8(&buf).unwrap());
        let entries = load_entries(&p, Language::En).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].description, BITCH_DESCRIPTION);
        assert_eq!(
            entries[0].categories,
            vec![IdentityCharacteristic::Gender, IdentityCharacteristic::SexualOrientation]
        );
    }

    #[test]
    fn empty_file_is_empty_vocabulary() {
        let (_d, p) = tmp("v.csv", "");
        let lem = IdentityLemmatizer::new(Language::En);
        let v = Vocabulary::load(&p, Language::En, &lem).unwrap();
        assert!(v.is_empty());
        assert_eq!(v.keys().count(), 0);
    }

    #[test]
    fn missing_file() {
        let err = load_entries(Path::new("/nonexistent/v.csv"), Language::En).unwrap_err();
        assert!(matches!(err, VocabularyError::FileNotFound(_)));
    }

    #[test]
    fn empty_categories_rejected_with_row() {
        let (_d, p) = tmp(
            "v.csv",
            "term,description,categories,source\nok,d,Gender,https://x.org/ok\nbad,d,,https://x.org/bad\n",
        );
        match load_entries(&p, Language::En).unwrap_err() {
            VocabularyError::Validation { row, rule } => {
                assert_eq!(row, 2);
                assert!(rule.contains("categories"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn other_row_rules() {
        let cases = [
            (" ,d,Gender,https://x.org/a", "term"),
            ("a,,Gender,https://x.org/a", "description"),
            ("a,d,Gender,not a url", "URL"),
            ("a,d,Nationality,https://x.org/a", "unknown identity"),
        ];
        for (row, needle) in cases {
            let (_d, p) = tmp("v.csv", &format!("term,description,categories,source\n{row}\n"));
            match load_entries(&p, Language::En).unwrap_err() {
                VocabularyError::Validation { row: 1, rule } => assert!(rule.contains(needle), "{rule}"),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn duplicate_term_is_hard_error() {
        let (_d, p) = tmp(
            "v.csv",
            "term,description,categories,source\na,d,Gender,https://x.org/a\na,e,Race,https://x.org/a\n",
        );
        assert!(matches!(
            load_entries(&p, Language::En).unwrap_err(),
            VocabularyError::Validation { row: 2, .. }
        ));
    }

    #[test]
    fn bad_header_and_ragged_rows_are_format_errors() {
        let (_d, p) = tmp("v.csv", "word,meaning\nx,y\n");
        assert!(matches!(load_entries(&p, Language::En).unwrap_err(), VocabularyError::Format { .. }));
        let (_d, p) = tmp("v.csv", "term,description,categories,source\nx,y\n");
        assert!(matches!(
            load_entries(&p, Language::En).unwrap_err(),
            VocabularyError::Format { row: 1, .. }
        ));
    }

    #[test]
    fn jsonl_with_spaced_categories_and_language_check() {
        let line = r#"{"term":"welfare queen","description":"d","categories":["Race","Socioeconomic"],"source":"https://en.wiktionary.org/wiki/welfare_queen","language":"en"}"#;
        let (_d, p) = tmp("v.jsonl", &format!("{line}\n\n"));
        let e = load_entries(&p, Language::En).unwrap();
        assert_eq!(
            e[0].categories,
            vec![IdentityCharacteristic::Race, IdentityCharacteristic::SocioeconomicStatus]
        );
        assert!(matches!(
            load_entries(&p, Language::Fr).unwrap_err(),
            VocabularyError::Validation { row: 1, .. }
        ));
        let (_d, p) = tmp("v.jsonl", "{not json}\n");
        assert!(matches!(load_entries(&p, Language::En).unwrap_err(), VocabularyError::Format { row: 1, .. }));
    }

    #[test]
    fn identity_index_keys() {
        let lem = IdentityLemmatizer::new(Language::En);
        let v = build_index(vec![entry("bitch"), entry("welfare queen")], &lem).unwrap();
        let mut keys: Vec<_> = v.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, vec![vec!["bitch".to_string()], vec!["welfare".into(), "queen".into()]]);
        assert_eq!(v.max_key_len(), 2);
    }

    struct Scripted(HashMap<&'static str, &'static str>);
    impl Lemmatizer for Scripted {
        fn language(&self) -> Language {
            Language::En
        }
        fn analyze(&self, text: &str) -> Result<Vec<Token>, LemmatizerError> {
            IdentityLemmatizer::new(Language::En).analyze(text).map(|ts| {
                ts.into_iter()
                    .map(|mut t| {
                        if let Some(l) = self.0.get(t.lemma.as_str()) {
                            t.lemma = l.to_string();
                        }
                        t
                    })
                    .collect()
            })
        }
    }

    #[test]
    fn scripted_lemmatizer_key() {
        let lem = Scripted(HashMap::from([("running", "run")]));
        let v = build_index(vec![entry("running dog")], &lem).unwrap();
        assert_eq!(v.lookup(&["run".into(), "dog".into()]), &[0]);
    }

    #[test]
    fn colliding_lemmas_share_a_key() {
        // Five entries; enumerate expected keys by hand from the rule tables:
        // bitch, bitches -> [bitch]; Queen -> [queen]; queens -> [queen]; welfare queens -> [welfare, queen]
        let lem = DefaultLemmatizer::new(Language::En).unwrap();
        let v = build_index(
            vec![entry("bitch"), entry("bitches"), entry("Queen"), entry("queens"), entry("welfare queens")],
            &lem,
        )
        .unwrap();
        let got: BTreeMap<Vec<String>, Vec<usize>> =
            v.keys().map(|k| (k.clone(), v.lookup(k).to_vec())).collect();
        let expected = BTreeMap::from([
            (vec!["bitch".to_string()], vec![0, 1]),
            (vec!["queen".to_string()], vec![2, 3]),
            (vec!["welfare".to_string(), "queen".to_string()], vec![4]),
        ]);
        assert_eq!(got, expected);
    }

    #[test]
    fn greek_final_sigma_in_keys() {
        let lem = IdentityLemmatizer::new(Language::El);
        let mut e = entry("ΜΑΛΑΚΑΣ");
        e.language = Language::El;
        let v = build_index(vec![e], &lem).unwrap();
        assert_eq!(v.lookup(&["μαλακασ".into()]), &[0]);
    }

    #[test]
    fn empty_lemmatization_is_error() {
        let lem = IdentityLemmatizer::new(Language::En);
        let mut e = entry("x");
        e.term = "!!!".into();
        assert!(matches!(build_index(vec![e], &lem), Err(VocabularyError::Lemmatization { .. })));
    }

    #[test]
    fn language_mismatch() {
        let lem = IdentityLemmatizer::new(Language::Fr);
        assert!(matches!(
            build_index(vec![entry("a")], &lem),
            Err(VocabularyError::LanguageMismatch { .. })
        ));
    }

    #[test]
    fn csv_and_jsonl_round_trip() {
        let lem = DefaultLemmatizer::new(Language::En).unwrap();
        let mut e = entry("welfare queen");
        e.description = "quoted \"text\", with, commas\nand a newline".into();
        e.categories = vec![IdentityCharacteristic::Race, IdentityCharacteristic::SocioeconomicStatus];
        let v = build_index(vec![entry("bitch"), e], &lem).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for name in ["out.csv", "out.jsonl"] {
            let p = dir.path().join(name);
            if name.ends_with("csv") {
                v.write_csv(&p).unwrap();
            } else {
                v.write_jsonl(&p).unwrap();
            }
            let back = Vocabulary::load(&p, Language::En, &lem).unwrap();
            assert_eq!(back, v);
            assert_eq!(Vocabulary::load(&p, Language::En, &lem).unwrap(), back);
        }
    }
}
