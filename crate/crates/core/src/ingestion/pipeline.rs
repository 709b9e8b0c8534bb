use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use super::api::{fetch_page, fetch_source_members, ApiTransport, Member, MAX_PAGE_SIZE};
use super::assess::assess_candidate;
use super::cache::DiskCache;
use super::definitions::{parse_definitions, SectionConfig};
use super::review::{entry_from_row, ReviewReport, ReviewRow};
use super::{CategorySource, IngestionError, TermCandidate};
use crate::matching::Lemmatizer;
use crate::parallel::ordered_map;
use crate::pipelines::Stage;
use crate::vocabulary::{build_index, Vocabulary, VocabularyError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CollectOptions {
    pub page_size: u32,
    /// Keep only the first `limit` candidates, in collection order.
    pub limit: Option<usize>,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self { page_size: MAX_PAGE_SIZE, limit: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceCount {
    pub title: String,
    pub members: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CandidateSet {
    pub candidates: Vec<TermCandidate>,
    pub per_source: Vec<SourceCount>,
    /// Main-namespace pages across all sources, before the limit.
    pub unique_pages: usize,
    /// Page ids whose HTML could not be fetched, with the API message.
    pub page_errors: Vec<(u64, String)>,
}

fn members_for(
    api: &dyn ApiTransport,
    cache: Option<&DiskCache>,
    source: &CategorySource,
    page_size: u32,
) -> Result<Vec<Member>, IngestionError> {
    if let Some(hit) = cache.map(|c| c.members(source)).transpose()?.flatten() {
        return Ok(hit);
    }
    let members = fetch_source_members(api, source, page_size)?;
    if let Some(c) = cache {
        c.put_members(source, &members)?;
    }
    Ok(members)
}

fn page_html(
    api: &dyn ApiTransport,
    cache: Option<&DiskCache>,
    language: crate::Language,
    page_id: u64,
) -> Result<String, IngestionError> {
    if let Some(hit) = cache.map(|c| c.page(language, page_id)).transpose()?.flatten() {
        return Ok(hit);
    }
    let page = fetch_page(api, language, page_id)?;
    if let Some(c) = cache {
        c.put_page(language, page_id, &page.html)?;
    }
    Ok(page.html)
}

/// Lists every source, unions main-namespace pages by id and extracts their
/// definitions. API errors on single pages leave that candidate without
/// definitions; network errors abort.
pub fn collect_candidates(
    api: &dyn ApiTransport,
    cache: Option<&DiskCache>,
    sources: &[CategorySource],
    sections: &SectionConfig,
    options: &CollectOptions,
) -> Result<CandidateSet, IngestionError> {
    let Some(language) = sources.first().map(|s| s.language) else {
        return Ok(CandidateSet::default());
    };
    if let Some(other) = sources.iter().find(|s| s.language != language) {
        return Err(IngestionError::InvalidSource(format!("{} is not a {language} source", other.title)));
    }
    let mut order: Vec<(u64, String)> = Vec::new();
    let mut origin: HashMap<u64, BTreeSet<CategorySource>> = HashMap::new();
    let mut per_source = Vec::new();
    for source in sources {
        let members = members_for(api, cache, source, options.page_size)?;
        per_source.push(SourceCount { title: source.title.clone(), members: members.len() });
        for m in members.into_iter().filter(|m| m.ns == 0) {
            let set = origin.entry(m.page_id).or_default();
            if set.is_empty() {
                order.push((m.page_id, m.title));
            }
            set.insert(source.clone());
        }
    }
    let unique_pages = order.len();
    if let Some(limit) = options.limit {
        order.truncate(limit);
    }
    let mut out = CandidateSet { per_source, unique_pages, ..CandidateSet::default() };
    for (page_id, term) in order {
        let definitions = match page_html(api, cache, language, page_id) {
            Ok(html) => parse_definitions(&html, sections),
            Err(IngestionError::Api { code, message }) => {
                out.page_errors.push((page_id, format!("{code}: {message}")));
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        let sources = origin.remove(&page_id).unwrap_or_default();
        out.candidates.push(TermCandidate { term, page_id, definitions, sources });
    }
    Ok(out)
}

/// Assesses every candidate and keeps the positive verdicts. The report has
/// one row per candidate in input order; failures become error rows.
pub fn build_vocabulary_from_candidates(
    candidates: &[TermCandidate],
    stage: Stage<'_>,
    lemmatizer: &dyn Lemmatizer,
    workers: usize,
) -> Result<(Vocabulary, ReviewReport), VocabularyError> {
    let rows = ordered_map(candidates, workers, |c| match assess_candidate(c, stage) {
        Ok(v) => ReviewRow {
            term: c.term.clone(),
            hate_speech: Some(v.hate_speech),
            categories: v.categories,
            vocabulary_entry: v.vocabulary_entry,
            reasoning: v.reasoning,
            error: String::new(),
        },
        Err(e) => ReviewRow { term: c.term.clone(), error: e.to_string(), ..ReviewRow::default() },
    });
    let entries = rows
        .iter()
        .filter(|r| r.hate_speech == Some(true))
        .map(|r| entry_from_row(r, stage.language))
        .collect();
    let vocab = build_index(entries, lemmatizer)?;
    Ok((vocab, ReviewReport { rows }))
}
