//! Term-based and term-free detection, explanation fusion and the decision rule.
//!
//! A text is negative only when both pipelines come back negative. When only
//! one pipeline flags the text its explanation is returned as is; when several
//! hateful explanations exist (from both pipelines, or from several matched
//! terms) they are merged by the fusion prompt.

mod fusion;
pub mod record;
mod term_based;
mod term_free;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fusion::{fuse, FusionError};
pub use record::{default_text_id, MatchRecord, ResultRecord};
pub use term_based::{run_term_based, TermBasedOutcome, TermFailure, TermVerdict};
pub use term_free::{run_term_free, FreeVerdict};

use crate::language::Language;
use crate::matching::{find_matches, Lemmatizer, MatchError, TermMatch};
use crate::model::{
    ChatProvider, ChatRequest, ParseError, PromptLibrary, ProviderError, RenderedPrompt,
    RequestError, TemplateError, DEFAULT_MAX_OUTPUT,
};
use crate::parallel::ordered_map;
use crate::vocabulary::Vocabulary;

/// Model id per prompt stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageModels {
    pub term_based: String,
    pub term_free: String,
    pub fusion: String,
    pub vocabulary: String,
}

impl Default for StageModels {
    fn default() -> Self {
        let m = "default".to_string();
        Self { term_based: m.clone(), term_free: m.clone(), fusion: m.clone(), vocabulary: m }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub models: StageModels,
    pub temperature: f32,
    pub max_output: u32,
    /// Extra attempts, with a format reminder, after an unparseable reply.
    pub format_retries: u32,
    /// Ask the term-free stage to also look for inherently derogatory terms.
    pub augmented_term_free: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            models: StageModels::default(),
            temperature: 0.0,
            max_output: DEFAULT_MAX_OUTPUT,
            format_retries: 1,
            augmented_term_free: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("unparseable model reply: {0}")]
    Parse(#[from] ParseError),
    #[error("model reply flagged hate speech without an explanation")]
    EmptyExplanation,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Request(#[from] RequestError),
}

impl PipelineError {
    fn is_format_error(&self) -> bool {
        matches!(self, Self::Parse(_) | Self::EmptyExplanation)
    }
}

/// Everything a prompt stage needs besides its inputs.
#[derive(Clone, Copy)]
pub struct Stage<'a> {
    pub provider: &'a dyn ChatProvider,
    pub prompts: &'a PromptLibrary,
    pub config: &'a DetectConfig,
    pub language: Language,
}

impl Stage<'_> {
    /// Sends the prompt, re-asking with `reminder` appended while the reply does not parse.
    fn complete_parsed<T>(
        &self,
        prompt: RenderedPrompt,
        model_id: &str,
        reminder: &str,
        parse: impl Fn(&str) -> Result<T, PipelineError>,
    ) -> Result<(T, String), PipelineError> {
        let mut request = ChatRequest::new(prompt, model_id, self.config.temperature, self.config.max_output)?;
        let mut attempt = 0;
        loop {
            let raw = self.provider.complete(&request)?;
            match parse(&raw) {
                Ok(v) => return Ok((v, raw)),
                Err(e) if e.is_format_error() && attempt < self.config.format_retries => {
                    if attempt == 0 {
                        request.user_prompt.push_str("\n\n");
                        request.user_prompt.push_str(reminder);
                    }
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    None,
    TermBased,
    TermFree,
    BothFused,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionResult {
    pub text_id: String,
    pub label: bool,
    pub explanation: String,
    pub provenance: Provenance,
    pub matches: Vec<TermMatch>,
    pub term_verdicts: Vec<TermVerdict>,
    pub term_failures: Vec<TermFailure>,
    /// Absent only when the term-free stage failed but a term verdict flagged the text.
    pub free_verdict: Option<FreeVerdict>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("matching failed: {0}")]
    Match(String),
    #[error("cannot certify a negative label: {}", .0.join("; "))]
    Uncertified(Vec<String>),
    #[error(transparent)]
    Fusion(#[from] FusionError),
}

impl From<MatchError> for DetectError {
    fn from(e: MatchError) -> Self {
        Self::Match(e.to_string())
    }
}

/// Runs both pipelines on one text and applies the decision table.
pub fn detect(
    text: &str,
    text_id: &str,
    vocab: &Vocabulary,
    lemmatizer: &dyn Lemmatizer,
    stage: Stage<'_>,
) -> Result<DetectionResult, DetectError> {
    let matches = find_matches(text, vocab, lemmatizer)?;
    let term = if matches.is_empty() {
        TermBasedOutcome::default()
    } else {
        run_term_based(text, &matches, stage)
    };
    let free = run_term_free(text, stage);

    let mut problems: Vec<String> = term
        .failures
        .iter()
        .map(|f| format!("term-based {:?}: {}", f.term_match.entry.term, f.error))
        .collect();
    if let Err(e) = &free {
        problems.push(format!("term-free: {e}"));
    }

    let hateful_terms: Vec<&TermVerdict> = term.verdicts.iter().filter(|v| v.hateful).collect();
    let free_hateful = free.as_ref().is_ok_and(|f| f.hateful);

    if hateful_terms.is_empty() && !free_hateful {
        if !problems.is_empty() {
            return Err(DetectError::Uncertified(problems));
        }
        return Ok(DetectionResult {
            text_id: text_id.to_string(),
            label: false,
            explanation: String::new(),
            provenance: Provenance::None,
            matches,
            term_verdicts: term.verdicts,
            term_failures: term.failures,
            free_verdict: free.ok(),
            warnings: Vec::new(),
        });
    }

    let mut explanations: Vec<String> = hateful_terms.iter().map(|v| v.explanation.clone()).collect();
    let provenance = match (hateful_terms.is_empty(), free_hateful) {
        (false, false) => Provenance::TermBased,
        (true, true) => Provenance::TermFree,
        (false, true) => Provenance::BothFused,
        (true, false) => unreachable!("negative case handled above"),
    };
    if let Ok(f) = &free {
        if f.hateful {
            explanations.push(f.explanation.clone());
        }
    }
    let explanation = if explanations.len() == 1 {
        explanations.remove(0)
    } else {
        fuse(&explanations, stage)?
    };

    Ok(DetectionResult {
        text_id: text_id.to_string(),
        label: true,
        explanation,
        provenance,
        matches,
        term_verdicts: term.verdicts,
        term_failures: term.failures,
        free_verdict: free.ok(),
        warnings: problems,
    })
}

/// Shared, immutable detection state.
#[derive(Clone)]
pub struct Detector {
    pub vocabulary: Arc<Vocabulary>,
    pub lemmatizer: Arc<dyn Lemmatizer>,
    pub provider: Arc<dyn ChatProvider>,
    pub prompts: Arc<PromptLibrary>,
    pub config: DetectConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemError {
    pub text_id: String,
    pub error: DetectError,
}

impl Detector {
    pub fn new(
        vocabulary: Arc<Vocabulary>,
        lemmatizer: Arc<dyn Lemmatizer>,
        provider: Arc<dyn ChatProvider>,
        config: DetectConfig,
    ) -> Self {
        Self {
            vocabulary,
            lemmatizer,
            provider,
            prompts: Arc::new(PromptLibrary::builtin()),
            config,
        }
    }

    pub fn language(&self) -> Language {
        self.vocabulary.language()
    }

    pub fn stage(&self) -> Stage<'_> {
        Stage {
            provider: self.provider.as_ref(),
            prompts: &self.prompts,
            config: &self.config,
            language: self.language(),
        }
    }

    pub fn detect(&self, text_id: &str, text: &str) -> Result<DetectionResult, DetectError> {
        detect(text, text_id, &self.vocabulary, self.lemmatizer.as_ref(), self.stage())
    }

    pub fn find_matches(&self, text: &str) -> Result<Vec<TermMatch>, MatchError> {
        find_matches(text, &self.vocabulary, self.lemmatizer.as_ref())
    }

    /// Detects every `(text_id, text)` item; results keep input order.
    pub fn detect_batch(
        &self,
        items: &[(String, String)],
        parallelism: usize,
    ) -> Vec<Result<DetectionResult, ItemError>> {
        ordered_map(items, parallelism, |(id, text)| {
            self.detect(id, text).map_err(|error| ItemError { text_id: id.clone(), error })
        })
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use crate::model::parse::serialize_tagged;

    pub fn term_reply(decision: &str, explanation: &str) -> String {
        serialize_tagged([
            ("STEP_1", "Non ambiguous term"),
            ("STEP_2", "reasoning"),
            ("STEP_3", decision),
            ("STEP_4", explanation),
        ])
    }

    pub fn free_reply(decision: &str, explanation: &str) -> String {
        serialize_tagged([("DECISION", decision), ("EXPLANATION", explanation)])
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use crate::matching::DefaultLemmatizer;
    use crate::model::{ScriptRule, ScriptedProvider};
    use crate::vocabulary::{build_index, IdentityCharacteristic, VocabularyEntry};

    const TERM_SYS: &str = "distinguish hateful from neutral uses";
    const FREE_SYS: &str = "determine if it contains hate speech";
    const FUSE_SYS: &str = "Merge Hate Speech Analysis Texts";

    fn vocab() -> Vocabulary {
        let lem = DefaultLemmatizer::new(Language::En).unwrap();
        let e = |term: &str, cats: Vec<IdentityCharacteristic>| VocabularyEntry {
            term: term.into(),
            description: format!("{term} description"),
            categories: cats,
            source: format!("https://en.wiktionary.org/wiki/{term}"),
            language: Language::En,
        };
        build_index(
            vec![
                e("bitch", vec![IdentityCharacteristic::Gender, IdentityCharacteristic::SexualOrientation]),
                e("sissy", vec![IdentityCharacteristic::SexualOrientation]),
            ],
            &lem,
        )
        .unwrap()
    }

    fn rule(sys: &str, user: &str, response: String) -> ScriptRule {
        ScriptRule {
            system_contains: Some(sys.into()),
            user_contains: vec![user.into()],
            user_equals: None,
            response,
        }
    }

    fn run(text: &str, rules: Vec<ScriptRule>) -> (Result<DetectionResult, DetectError>, ScriptedProvider) {
        let provider = ScriptedProvider::keyed(rules);
        let prompts = PromptLibrary::builtin();
        let config = DetectConfig::default();
        let lem = DefaultLemmatizer::new(Language::En).unwrap();
        let v = vocab();
        let stage = Stage { provider: &provider, prompts: &prompts, config: &config, language: Language::En };
        let r = detect(text, "t1", &v, &lem, stage);
        (r, provider)
    }

    fn truth_table_case(term_hateful: bool, free_hateful: bool) -> (DetectionResult, usize) {
        let text = "that bitch again";
        let term = if term_hateful { "Hateful" } else { "Non hateful" };
        let free = if free_hateful { "Hate speech" } else { "Not hate speech" };
        let (r, p) = run(
            text,
            vec![
                rule(TERM_SYS, "bitch", term_reply(term, "term explanation")),
                rule(FREE_SYS, text, free_reply(free, "free explanation")),
                rule(FUSE_SYS, "Text 2:", "fused explanation".into()),
            ],
        );
        let fusion_calls = p.requests().iter().filter(|r| r.system_prompt.contains(FUSE_SYS)).count();
        (r.unwrap(), fusion_calls)
    }

    #[test]
    fn decision_table_is_exhaustive() {
        let expected = [
            ((false, false), false, Provenance::None, "", 0),
            ((true, false), true, Provenance::TermBased, "term explanation", 0),
            ((false, true), true, Provenance::TermFree, "free explanation", 0),
            ((true, true), true, Provenance::BothFused, "fused explanation", 1),
        ];
        for ((t, f), label, prov, expl, fusions) in expected {
            let (r, calls) = truth_table_case(t, f);
            assert_eq!(r.label, label, "case {t} {f}");
            assert_eq!(r.label, r.term_verdicts.iter().any(|v| v.hateful) || r.free_verdict.as_ref().unwrap().hateful);
            assert_eq!(r.provenance, prov);
            assert_eq!(r.explanation, expl);
            assert_eq!(calls, fusions);
            assert_eq!(r.explanation.is_empty(), !r.label);
        }
    }

    #[test]
    fn no_match_means_no_term_call() {
        let (r, p) = run("a calm sentence", vec![rule(FREE_SYS, "calm", free_reply("Not hate speech", "neutral"))]);
        let r = r.unwrap();
        assert!(!r.label);
        assert!(r.matches.is_empty());
        assert_eq!(p.request_count(), 1);
    }

    #[test]
    fn several_hateful_terms_are_fused_even_without_free_flag() {
        let text = "bitch and sissy";
        let (r, p) = run(
            text,
            vec![
                rule(TERM_SYS, "**Term:** bitch", term_reply("Hateful", "gendered slur")),
                rule(TERM_SYS, "**Term:** sissy", term_reply("Hateful", "homophobic slur")),
                rule(FREE_SYS, text, free_reply("Not hate speech", "n")),
                rule(FUSE_SYS, "Text 1: gendered slur\nText 2: homophobic slur", "merged".into()),
            ],
        );
        let r = r.unwrap();
        assert_eq!(r.provenance, Provenance::TermBased);
        assert_eq!(r.explanation, "merged");
        assert_eq!(p.request_count(), 4);
    }

    #[test]
    fn free_error_with_term_flag_stands_with_warning() {
        let text = "that bitch again";
        let (r, _) = run(text, vec![rule(TERM_SYS, "bitch", term_reply("Hateful", "slur"))]);
        let r = r.unwrap();
        assert!(r.label);
        assert_eq!(r.provenance, Provenance::TermBased);
        assert!(r.free_verdict.is_none());
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].starts_with("term-free"));
    }

    #[test]
    fn error_plus_negative_is_uncertified() {
        let text = "that bitch again";
        let (r, _) = run(text, vec![rule(FREE_SYS, text, free_reply("Not hate speech", "n"))]);
        match r.unwrap_err() {
            DetectError::Uncertified(reasons) => assert!(reasons[0].contains("bitch")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fusion_failure_errors_the_item() {
        let text = "that bitch again";
        let (r, _) = run(
            text,
            vec![
                rule(TERM_SYS, "bitch", term_reply("Hateful", "a")),
                rule(FREE_SYS, text, free_reply("Hate speech", "b")),
            ],
        );
        assert!(matches!(r, Err(DetectError::Fusion(FusionError::Provider(_)))));
    }

    #[test]
    fn adding_a_hateful_verdict_never_clears_the_label() {
        for free in [true, false] {
            let (without, _) = truth_table_case(false, free);
            let (with, _) = truth_table_case(true, free);
            assert!(with.label >= without.label);
        }
    }

    #[test]
    fn batch_preserves_order_and_isolates_errors() {
        let provider: Arc<dyn ChatProvider> = Arc::new(ScriptedProvider::keyed(vec![
            rule(FREE_SYS, "one", free_reply("Not hate speech", "n")),
            rule(FREE_SYS, "three", free_reply("Hate speech", "h")),
        ]));
        let det = Detector::new(
            Arc::new(vocab()),
            Arc::new(DefaultLemmatizer::new(Language::En).unwrap()),
            provider,
            DetectConfig::default(),
        );
        let items: Vec<(String, String)> = ["one", "two", "three"]
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("id{i}"), t.to_string()))
            .collect();
        let out = det.detect_batch(&items, 2);
        assert_eq!(out.len(), 3);
        assert!(!out[0].as_ref().unwrap().label);
        assert_eq!(out[1].as_ref().unwrap_err().text_id, "id1");
        assert!(out[2].as_ref().unwrap().label);
        assert!(det.detect_batch(&[], 2).is_empty());
    }
}
