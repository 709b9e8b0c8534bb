//! Definition extraction from rendered Wiktionary pages.

use std::collections::HashSet;
use std::path::Path;

use scraper::{ElementRef, Html};
use serde::{Deserialize, Serialize};

use super::IngestionError;
use crate::language::Language;
use crate::text::fold;

/// Which sections of a page hold definitions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionConfig {
    /// Level-2 headings of the wiki's own language. Empty accepts every language section.
    #[serde(default)]
    pub language_headings: Vec<String>,
    /// Part-of-speech headings whose lists are definitions.
    pub pos_headings: Vec<String>,
}

impl SectionConfig {
    pub fn builtin(language: Language) -> Self {
        let raw = match language {
            Language::En => include_str!("../../data/ingestion/en.json"),
            Language::Fr => include_str!("../../data/ingestion/fr.json"),
            Language::El => include_str!("../../data/ingestion/el.json"),
        };
        serde_json::from_str(raw).expect("built-in section config parses")
    }

    pub fn load(path: &Path) -> Result<Self, IngestionError> {
        let raw = std::fs::read_to_string(path).map_err(|e| IngestionError::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| IngestionError::Fixture(format!("{}: {e}", path.display())))
    }

    pub fn pos_only(headings: &[&str]) -> Self {
        Self { language_headings: Vec::new(), pos_headings: headings.iter().map(|s| s.to_string()).collect() }
    }
}

/// Heading text without edit links or numbering, case-folded.
pub fn normalize_heading(raw: &str) -> String {
    let mut s = collapse(raw);
    loop {
        let trimmed = s.trim_end();
        if trimmed.ends_with(']') {
            if let Some(open) = trimmed.rfind('[') {
                s = trimmed[..open].to_string();
                continue;
            }
        }
        let without_digits = trimmed.trim_end_matches(|c: char| c.is_ascii_digit());
        if without_digits.len() != trimmed.len() {
            s = without_digits.to_string();
            continue;
        }
        s = trimmed.to_string();
        break;
    }
    fold(s.trim())
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn heading_level(name: &str) -> Option<u8> {
    match name {
        "h1" => Some(1),
        "h2" => Some(2),
        "h3" => Some(3),
        "h4" => Some(4),
        "h5" => Some(5),
        "h6" => Some(6),
        _ => None,
    }
}

fn is_list(name: &str) -> bool {
    matches!(name, "ol" | "ul" | "dl")
}

fn skip_subtree(el: &ElementRef<'_>) -> bool {
    matches!(el.value().name(), "style" | "script" | "sup")
        || el.value().classes().any(|c| c == "mw-editsection" || c == "reference")
}

fn push_text(el: ElementRef<'_>, nested_lists: bool, out: &mut String) {
    for child in el.children() {
        if let Some(text) = child.value().as_text() {
            out.push_str(text);
        } else if let Some(e) = ElementRef::wrap(child) {
            if skip_subtree(&e) || (!nested_lists && is_list(e.value().name())) {
                continue;
            }
            push_text(e, nested_lists, out);
        }
    }
}

fn clean(raw: &str) -> String {
    collapse(&raw.replace(['<', '>'], " "))
}

struct Walker<'c> {
    languages: HashSet<String>,
    pos: HashSet<String>,
    config: &'c SectionConfig,
    in_language: bool,
    in_pos: bool,
    out: Vec<String>,
}

impl Walker<'_> {
    fn visit(&mut self, el: ElementRef<'_>) {
        let name = el.value().name();
        if let Some(level) = heading_level(name) {
            let mut text = String::new();
            push_text(el, true, &mut text);
            let heading = normalize_heading(&text);
            if level <= 2 {
                self.in_language = self.config.language_headings.is_empty() || self.languages.contains(&heading);
                self.in_pos = false;
            } else {
                self.in_pos = self.pos.contains(&heading);
            }
            return;
        }
        if matches!(name, "ol" | "ul") {
            if self.in_language && self.in_pos {
                for li in el.children().filter_map(ElementRef::wrap).filter(|c| c.value().name() == "li") {
                    let mut text = String::new();
                    push_text(li, false, &mut text);
                    let text = clean(&text);
                    if !text.is_empty() {
                        self.out.push(text);
                    }
                }
            }
            // Nested lists are examples or quotations, never separate definitions.
            return;
        }
        if skip_subtree(&el) || name == "table" {
            return;
        }
        for child in el.children().filter_map(ElementRef::wrap) {
            self.visit(child);
        }
    }
}

/// Plain-text definitions from the top-level lists under part-of-speech
/// headings, in document order.
pub fn parse_definitions(page_html: &str, config: &SectionConfig) -> Vec<String> {
    let doc = Html::parse_fragment(page_html);
    let mut walker = Walker {
        languages: config.language_headings.iter().map(|h| normalize_heading(h)).collect(),
        pos: config.pos_headings.iter().map(|h| normalize_heading(h)).collect(),
        config,
        in_language: config.language_headings.is_empty(),
        in_pos: false,
        out: Vec::new(),
    };
    walker.visit(doc.root_element());
    walker.out
}
