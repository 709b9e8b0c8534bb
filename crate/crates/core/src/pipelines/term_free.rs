use serde::Serialize;

use super::{PipelineError, Stage};
use crate::model::parse::{parse_decision, parse_tagged};
use crate::model::template::vars;
use crate::model::TemplateName;

const TAGS: [&str; 2] = ["DECISION", "EXPLANATION"];
const REMINDER: &str = "Answer using exactly the two XML tags <DECISION> and <EXPLANATION>. \
In <DECISION> write only \"Hate speech\" or \"Not hate speech\".";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreeVerdict {
    pub hateful: bool,
    pub explanation: String,
    pub raw_response: String,
}

fn parse(raw: &str) -> Result<(bool, String), PipelineError> {
    let tags = parse_tagged(raw, &TAGS)?;
    let hateful = parse_decision(&tags["DECISION"], "Hate speech", "Not hate speech")?;
    let explanation = tags["EXPLANATION"].clone();
    if explanation.is_empty() {
        return Err(PipelineError::EmptyExplanation);
    }
    Ok((hateful, explanation))
}

/// Single-call detection grounded only in the identity characteristics.
pub fn run_term_free(text: &str, stage: Stage<'_>) -> Result<FreeVerdict, PipelineError> {
    let name = if stage.config.augmented_term_free {
        TemplateName::TermFreeAugmented
    } else {
        TemplateName::TermFree
    };
    let prompt = stage.prompts.get(name, stage.language).render(&vars([("text", text)]))?;
    let ((hateful, explanation), raw_response) =
        stage.complete_parsed(prompt, &stage.config.models.term_free, REMINDER, parse)?;
    Ok(FreeVerdict { hateful, explanation, raw_response })
}
