use serde_json::{Map, Value};
use thiserror::Error;

use super::TermCandidate;
use crate::model::parse::{extract_json_object, ParseError};
use crate::model::template::vars;
use crate::model::{ChatRequest, ProviderError, RequestError, TemplateError, TemplateName};
use crate::pipelines::Stage;
use crate::vocabulary::IdentityCharacteristic;

const REMINDER: &str = "Output only a JSON object with the fields \"reasoning\", \"hate_speech\", \
\"categories\" and \"vocabulary_entry\".";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssessError {
    #[error("candidate has no definitions")]
    NoDefinitions,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("unparseable reply: {0}")]
    Parse(#[from] ParseError),
    #[error("field {field:?}: {reason}")]
    Field { field: &'static str, reason: String },
    #[error("inconsistent verdict: {0}")]
    InconsistentVerdict(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Request(#[from] RequestError),
}

/// The model's filtering decision and enriched description for one term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateVerdict {
    pub reasoning: String,
    pub hate_speech: bool,
    pub categories: Vec<IdentityCharacteristic>,
    pub vocabulary_entry: String,
}

/// Numbered list, one definition per line.
pub fn format_definitions(definitions: &[String]) -> String {
    definitions
        .iter()
        .enumerate()
        .map(|(i, d)| format!("{}. {}", i + 1, d))
        .collect::<Vec<_>>()
        .join("\n")
}

fn string_field(obj: &Map<String, Value>, field: &'static str) -> Result<String, AssessError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.trim().to_string()),
        Some(_) => Err(AssessError::Field { field, reason: "expected a string".into() }),
        None => Err(AssessError::Field { field, reason: "missing".into() }),
    }
}

fn parse_verdict(raw: &str) -> Result<CandidateVerdict, AssessError> {
    let obj = extract_json_object(raw)?;
    let reasoning = string_field(&obj, "reasoning")?;
    let hate_speech = match obj.get("hate_speech") {
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(AssessError::Field { field: "hate_speech", reason: "expected a boolean".into() }),
        None => return Err(AssessError::Field { field: "hate_speech", reason: "missing".into() }),
    };
    let list = match obj.get("categories") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(AssessError::Field { field: "categories", reason: "expected an array".into() }),
        None => return Err(AssessError::Field { field: "categories", reason: "missing".into() }),
    };
    let mut categories = Vec::new();
    for v in list {
        let name = v
            .as_str()
            .ok_or_else(|| AssessError::Field { field: "categories", reason: "expected strings".into() })?;
        let c: IdentityCharacteristic = name
            .parse()
            .map_err(|e: crate::vocabulary::category::UnknownCharacteristic| AssessError::Field { field: "categories", reason: e.to_string() })?;
        if !categories.contains(&c) {
            categories.push(c);
        }
    }
    let vocabulary_entry = string_field(&obj, "vocabulary_entry")?;
    Ok(CandidateVerdict { reasoning, hate_speech, categories, vocabulary_entry })
}

fn check(v: CandidateVerdict) -> Result<CandidateVerdict, AssessError> {
    let problem = match (v.hate_speech, v.categories.is_empty(), v.vocabulary_entry.is_empty()) {
        (true, true, _) => Some("hate_speech is true but no categories are given"),
        (true, _, true) => Some("hate_speech is true but the vocabulary entry is empty"),
        (false, false, _) => Some("hate_speech is false but categories are given"),
        (false, _, false) => Some("hate_speech is false but a vocabulary entry is given"),
        _ => None,
    };
    match problem {
        Some(p) => Err(AssessError::InconsistentVerdict(p.to_string())),
        None => Ok(v),
    }
}

/// Asks the model whether a candidate belongs in the vocabulary.
pub fn assess_candidate(candidate: &TermCandidate, stage: Stage<'_>) -> Result<CandidateVerdict, AssessError> {
    if candidate.definitions.is_empty() {
        return Err(AssessError::NoDefinitions);
    }
    let definitions = format_definitions(&candidate.definitions);
    let prompt = stage
        .prompts
        .get(TemplateName::VocabularyCreation, stage.language)
        .render(&vars([
            ("term", &candidate.term),
            ("definitions", &definitions),
            ("language", stage.language.english_name()),
        ]))?;
    let mut request = ChatRequest::new(
        prompt,
        &stage.config.models.vocabulary,
        stage.config.temperature,
        stage.config.max_output,
    )?;
    let mut attempt = 0;
    loop {
        let raw = stage.provider.complete(&request)?;
        match parse_verdict(&raw) {
            Ok(v) => return check(v),
            Err(AssessError::Parse(_) | AssessError::Field { .. }) if attempt < stage.config.format_retries => {
                if attempt == 0 {
                    request.user_prompt.push_str("\n\n");
                    request.user_prompt.push_str(REMINDER);
                }
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::Language;
    use crate::model::{PromptLibrary, ScriptedProvider};
    use crate::pipelines::DetectConfig;
    use IdentityCharacteristic::*;

    const WELFARE: &str = r#"{
"reasoning": "The term \"welfare queen\" is toxic because it's rooted in racist and sexist stereotypes that falsely portray people receiving government assistance as fraudulent and lazy, particularly targeting Black women.",
"hate_speech": true,
"categories": ["Race", "Socioeconomic Status"],
"vocabulary_entry": "The term \"welfare queen\" refers to someone who allegedly exploits government welfare systems, but it's primarily considered derogatory and offensive."
}"#;

    const NERD: &str = r#"{
"reasoning": "While potentially teasing, 'nerd' does not target an identity group based on protected characteristics.",
"hate_speech": false,
"categories": [],
"vocabulary_entry": ""
}"#;

    fn candidate(term: &str, defs: &[&str]) -> TermCandidate {
        TermCandidate {
            term: term.into(),
            page_id: 1,
            definitions: defs.iter().map(|d| d.to_string()).collect(),
            sources: Default::default(),
        }
    }

    fn run(c: &TermCandidate, p: &ScriptedProvider, lang: Language) -> Result<CandidateVerdict, AssessError> {
        let prompts = PromptLibrary::builtin();
        let config = DetectConfig::default();
        assess_candidate(c, Stage { provider: p, prompts: &prompts, config: &config, language: lang })
    }

    #[test]
    fn welfare_queen() {
        let p = ScriptedProvider::sequence([WELFARE]);
        let c = candidate("welfare queen", &["A woman collecting welfare, seen as doing so out of laziness, rather than genuine need."]);
        let v = run(&c, &p, Language::En).unwrap();
        assert!(v.hate_speech);
        assert_eq!(v.categories, [Race, SocioeconomicStatus]);
        let user = &p.requests()[0].user_prompt;
        assert_eq!(
            user,
            "TERM: welfare queen\nDESCRIPTION(S):\n1. A woman collecting welfare, seen as doing so out of laziness, rather than genuine need."
        );
    }

    #[test]
    fn nerd() {
        let p = ScriptedProvider::sequence([NERD]);
        let c = candidate("nerd", &["A person who is intellectual but generally introverted.", "One who has an intense, obsessive interest in something."]);
        let v = run(&c, &p, Language::En).unwrap();
        assert!(!v.hate_speech);
        assert!(v.categories.is_empty());
        assert_eq!(v.vocabulary_entry, "");
        assert!(p.requests()[0].user_prompt.contains("\n2. One who has"));
    }

    #[test]
    fn capitalized_keys_accepted() {
        let p = ScriptedProvider::sequence([r#"{"Reasoning": "r", "hate_speech": true, "categories": ["Gender", "Sexual Orientation"], "vocabulary_entry": "e"}"#]);
        let v = run(&candidate("slut", &["x"]), &p, Language::En).unwrap();
        assert_eq!(v.categories, [Gender, SexualOrientation]);
    }

    #[test]
    fn inconsistent_outputs() {
        for bad in [
            r#"{"reasoning": "r", "hate_speech": true, "categories": [], "vocabulary_entry": "e"}"#,
            r#"{"reasoning": "r", "hate_speech": true, "categories": ["Age"], "vocabulary_entry": ""}"#,
            r#"{"reasoning": "r", "hate_speech": false, "categories": ["Age"], "vocabulary_entry": ""}"#,
        ] {
            let p = ScriptedProvider::sequence([bad]);
            assert!(matches!(run(&candidate("t", &["d"]), &p, Language::En), Err(AssessError::InconsistentVerdict(_))));
        }
    }

    #[test]
    fn malformed_retries_then_fails() {
        let p = ScriptedProvider::sequence(["no json here", "still none"]);
        assert!(matches!(run(&candidate("t", &["d"]), &p, Language::En), Err(AssessError::Parse(ParseError::NoJson))));
        assert_eq!(p.request_count(), 2);
        assert!(p.requests()[1].user_prompt.ends_with(REMINDER));
        let p = ScriptedProvider::sequence([r#"{"reasoning": "r"}"#.to_string(), NERD.to_string()]);
        assert!(run(&candidate("t", &["d"]), &p, Language::En).is_ok());
    }

    #[test]
    fn language_is_substituted() {
        let p = ScriptedProvider::sequence([NERD]);
        run(&candidate("t", &["d"]), &p, Language::Fr).unwrap();
        let sys = &p.requests()[0].system_prompt;
        assert!(sys.contains("French terms that can constitute hate speech"));
        assert!(!sys.contains("{{"));
    }

    #[test]
    fn no_definitions_no_call() {
        let p = ScriptedProvider::sequence([NERD]);
        assert_eq!(run(&candidate("t", &[]), &p, Language::En), Err(AssessError::NoDefinitions));
        assert_eq!(p.request_count(), 0);
    }
}
