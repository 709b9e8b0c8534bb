use serde::Serialize;

use super::{PipelineError, Stage};
use crate::matching::TermMatch;
use crate::model::parse::{parse_decision, parse_tagged};
use crate::model::template::vars;
use crate::model::TemplateName;
use crate::vocabulary::category::join_display;

const TAGS: [&str; 4] = ["STEP_1", "STEP_2", "STEP_3", "STEP_4"];
const REMINDER: &str = "Answer using exactly the four XML tags <STEP_1>, <STEP_2>, <STEP_3> and <STEP_4>. \
In <STEP_3> write only \"Hateful\" or \"Non hateful\".";

/// Disambiguation result for one vocabulary entry, covering every span it matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermVerdict {
    pub matches: Vec<TermMatch>,
    pub step1: String,
    pub step2: String,
    pub hateful: bool,
    pub explanation: String,
    pub raw_response: String,
}

impl TermVerdict {
    pub fn term(&self) -> &str {
        &self.matches[0].entry.term
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermFailure {
    pub term_match: TermMatch,
    pub error: PipelineError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermBasedOutcome {
    pub verdicts: Vec<TermVerdict>,
    pub failures: Vec<TermFailure>,
}

struct Steps {
    step1: String,
    step2: String,
    hateful: bool,
    explanation: String,
}

fn parse_steps(raw: &str) -> Result<Steps, PipelineError> {
    let mut tags = parse_tagged(raw, &TAGS)?;
    let hateful = parse_decision(&tags["STEP_3"], "Hateful", "Non hateful")?;
    let explanation = tags.remove("STEP_4").unwrap_or_default();
    if hateful && explanation.is_empty() {
        return Err(PipelineError::EmptyExplanation);
    }
    Ok(Steps {
        step1: tags.remove("STEP_1").unwrap_or_default(),
        step2: tags.remove("STEP_2").unwrap_or_default(),
        hateful,
        explanation,
    })
}

/// Groups matches by entry in first-occurrence order.
fn group_by_entry(matches: &[TermMatch]) -> Vec<Vec<TermMatch>> {
    let mut groups: Vec<Vec<TermMatch>> = Vec::new();
    for m in matches {
        match groups.iter_mut().find(|g| g[0].entry_index == m.entry_index) {
            Some(g) => g.push(m.clone()),
            None => groups.push(vec![m.clone()]),
        }
    }
    groups
}

/// Asks the model, once per distinct matched entry, whether the term is used hatefully.
pub fn run_term_based(text: &str, matches: &[TermMatch], stage: Stage<'_>) -> TermBasedOutcome {
    let template = stage.prompts.get(TemplateName::TermBased, stage.language);
    let mut out = TermBasedOutcome::default();
    for group in group_by_entry(matches) {
        let entry = &group[0].entry;
        let characteristics = join_display(&entry.categories);
        let result = template
            .render(&vars([
                ("term", &entry.term),
                ("description", &entry.description),
                ("text", text),
                ("characteristics", &characteristics),
            ]))
            .map_err(PipelineError::from)
            .and_then(|prompt| {
                stage.complete_parsed(prompt, &stage.config.models.term_based, REMINDER, parse_steps)
            });
        match result {
            Ok((s, raw)) => out.verdicts.push(TermVerdict {
                matches: group,
                step1: s.step1,
                step2: s.step2,
                hateful: s.hateful,
                explanation: s.explanation,
                raw_response: raw,
            }),
            Err(error) => out.failures.push(TermFailure { term_match: group[0].clone(), error }),
        }
    }
    out
}
