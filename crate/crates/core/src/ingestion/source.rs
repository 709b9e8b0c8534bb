use serde::{Deserialize, Serialize};

use super::IngestionError;
use crate::language::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    /// Members of a category page.
    Category,
    /// Pages linking to a usage-label page.
    Tag,
}

/// A Wiktionary category or tag that yields term candidates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategorySource {
    pub language: Language,
    pub kind: SourceKind,
    pub title: String,
}

/// Category namespace prefix of each wiki.
pub fn category_prefix(language: Language) -> &'static str {
    match language {
        Language::En => "Category:",
        Language::Fr => "Catégorie:",
        Language::El => "Κατηγορία:",
    }
}

impl CategorySource {
    pub fn new(language: Language, kind: SourceKind, title: &str) -> Result<Self, IngestionError> {
        let title = title.trim();
        if title.is_empty() {
            return Err(IngestionError::InvalidSource("empty title".into()));
        }
        let title = match kind {
            SourceKind::Category => {
                let prefix = category_prefix(language);
                let rest = title
                    .strip_prefix(prefix)
                    .ok_or_else(|| IngestionError::InvalidSource(format!("{title:?} does not start with {prefix:?}")))?
                    .trim();
                if rest.is_empty() {
                    return Err(IngestionError::InvalidSource(format!("{title:?} names no category")));
                }
                format!("{prefix}{rest}")
            }
            SourceKind::Tag => title.to_string(),
        };
        Ok(Self { language, kind, title })
    }

    fn known(language: Language, kind: SourceKind, title: &str) -> Self {
        Self::new(language, kind, title).expect("built-in source is valid")
    }
}

/// The categories and usage-label tags used to collect candidates.
pub fn default_sources(language: Language) -> Vec<CategorySource> {
    use SourceKind::{Category as C, Tag as T};
    let list: &[(SourceKind, &str)] = match language {
        Language::En => &[
            (C, "Category:English derogatory terms"),
            (C, "Category:English vulgarities"),
            (C, "Category:English offensive terms"),
        ],
        Language::Fr => &[
            (C, "Catégorie:Termes péjoratifs en français"),
            (C, "Catégorie:Insultes en français"),
        ],
        Language::El => &[
            (C, "Κατηγορία:Μειωτικοί όροι (νέα ελληνικά)"),
            (T, "μειωτικός"),
            (T, "μειωτική"),
            (T, "μειωτικό"),
            (T, "μειωτικά"),
            (C, "Κατηγορία:Υβριστικοί όροι (νέα ελληνικά)"),
            (T, "υβριστικός"),
            (T, "υβριστική"),
            (T, "υβριστικό"),
            (T, "υβριστικά"),
            (C, "Κατηγορία: Χυδαιολογίες (νέα ελληνικά)"),
            (T, "χυδαίος"),
            (T, "χυδαία"),
            (T, "χυδαίο"),
            (T, "βρισιά"),
            (T, "βρισιές"),
        ],
    };
    list.iter().map(|(k, t)| CategorySource::known(language, *k, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_is_enforced_and_normalized() {
        assert!(CategorySource::new(Language::En, SourceKind::Category, "English derogatory terms").is_err());
        assert!(CategorySource::new(Language::En, SourceKind::Tag, " ").is_err());
        let s = CategorySource::new(Language::El, SourceKind::Category, "Κατηγορία: Χυδαιολογίες (νέα ελληνικά)").unwrap();
        assert_eq!(s.title, "Κατηγορία:Χυδαιολογίες (νέα ελληνικά)");
    }

    #[test]
    fn builtin_sources() {
        assert_eq!(default_sources(Language::En).len(), 3);
        assert_eq!(default_sources(Language::Fr).len(), 2);
        let el = default_sources(Language::El);
        assert_eq!(el.len(), 16);
        assert_eq!(el.iter().filter(|s| s.kind == SourceKind::Category).count(), 3);
        assert!(el.iter().any(|s| s.title == "υβριστικά"));
    }
}
