//! Prompt templates with `{{name}}` placeholders.
//!
//! Substitution is single-pass: inserted values are never rescanned, and a
//! value that itself contains a complete `{{name}}` marker is rejected so the
//! rendered output never carries unresolved-looking placeholders.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::language::Language;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("missing template variable {0:?}")]
    MissingVariable(String),
    #[error("unknown template variable {0:?}")]
    UnknownVariable(String),
    #[error("value for {0:?} contains a placeholder marker")]
    MarkerInValue(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
}

/// The prompt stages of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateName {
    TermBased,
    TermFree,
    TermFreeAugmented,
    Fusion,
    VocabularyCreation,
}

impl TemplateName {
    pub const ALL: [TemplateName; 5] = [
        Self::TermBased,
        Self::TermFree,
        Self::TermFreeAugmented,
        Self::Fusion,
        Self::VocabularyCreation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::TermBased => "term_based",
            Self::TermFree => "term_free",
            Self::TermFreeAugmented => "term_free_augmented",
            Self::Fusion => "fusion",
            Self::VocabularyCreation => "vocabulary_creation",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub language: Language,
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug)]
enum Piece<'a> {
    Literal(&'a str),
    Var(&'a str),
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn pieces(template: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) if is_ident(&after[..close]) => {
                if open > 0 {
                    out.push(Piece::Literal(&rest[..open]));
                }
                out.push(Piece::Var(&after[..close]));
                rest = &after[close + 2..];
            }
            _ => {
                out.push(Piece::Literal(&rest[..open + 2]));
                rest = after;
            }
        }
    }
    if !rest.is_empty() {
        out.push(Piece::Literal(rest));
    }
    out
}

/// True when `s` contains a complete `{{ident}}` marker.
pub fn contains_marker(s: &str) -> bool {
    pieces(s).iter().any(|p| matches!(p, Piece::Var(_)))
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, language: Language, system: &str, user: &str) -> Self {
        Self {
            name: name.into(),
            language,
            system: system.strip_suffix('\n').unwrap_or(system).to_string(),
            user: user.strip_suffix('\n').unwrap_or(user).to_string(),
        }
    }

    /// Placeholder names across both parts, sorted.
    pub fn placeholders(&self) -> BTreeSet<&str> {
        pieces(&self.system)
            .into_iter()
            .chain(pieces(&self.user))
            .filter_map(|p| match p {
                Piece::Var(v) => Some(v),
                Piece::Literal(_) => None,
            })
            .collect()
    }

    pub fn render(&self, vars: &BTreeMap<String, String>) -> Result<RenderedPrompt, TemplateError> {
        let names = self.placeholders();
        if let Some(unknown) = vars.keys().find(|k| !names.contains(k.as_str())) {
            return Err(TemplateError::UnknownVariable(unknown.clone()));
        }
        for (k, v) in vars {
            if contains_marker(v) {
                return Err(TemplateError::MarkerInValue(k.clone()));
            }
        }
        let fill = |part: &str| -> Result<String, TemplateError> {
            let mut out = String::with_capacity(part.len());
            for p in pieces(part) {
                match p {
                    Piece::Literal(s) => out.push_str(s),
                    Piece::Var(v) => out.push_str(
                        vars.get(v)
                            .ok_or_else(|| TemplateError::MissingVariable(v.to_string()))?,
                    ),
                }
            }
            Ok(out)
        };
        Ok(RenderedPrompt {
            system: fill(&self.system)?,
            user: fill(&self.user)?,
        })
    }
}

/// Convenience wrapper over [`PromptTemplate::render`].
pub fn render(
    template: &PromptTemplate,
    vars: &BTreeMap<String, String>,
) -> Result<RenderedPrompt, TemplateError> {
    template.render(vars)
}

/// Builds a variable map from `(name, value)` pairs.
pub fn vars<const N: usize>(pairs: [(&str, &str); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

macro_rules! builtin {
    ($stem:literal) => {
        (
            include_str!(concat!("../../prompts/en/", $stem, ".system.txt")),
            include_str!(concat!("../../prompts/en/", $stem, ".user.txt")),
        )
    };
}

/// Templates shipped with the crate. Only English instructions are bundled;
/// other languages fall back to them.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<(TemplateName, Language), PromptTemplate>,
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        for name in TemplateName::ALL {
            let (system, user) = match name {
                TemplateName::TermBased => builtin!("term_based"),
                TemplateName::TermFree => builtin!("term_free"),
                TemplateName::TermFreeAugmented => builtin!("term_free_augmented"),
                TemplateName::Fusion => builtin!("fusion"),
                TemplateName::VocabularyCreation => builtin!("vocabulary_creation"),
            };
            templates.insert(
                (name, Language::En),
                PromptTemplate::new(name.as_str(), Language::En, system, user),
            );
        }
        Self { templates }
    }

    /// Registers a translated template, replacing any previous one.
    pub fn insert(&mut self, name: TemplateName, template: PromptTemplate) {
        self.templates.insert((name, template.language), template);
    }

    /// Looks up a template for the language, falling back to English.
    pub fn get(&self, name: TemplateName, language: Language) -> &PromptTemplate {
        self.templates
            .get(&(name, language))
            .or_else(|| self.templates.get(&(name, Language::En)))
            .expect("every template has an English version")
    }
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}
