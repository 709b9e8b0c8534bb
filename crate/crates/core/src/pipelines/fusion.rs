use thiserror::Error;

use super::Stage;
use crate::model::template::vars;
use crate::model::{ChatRequest, ProviderError, RequestError, TemplateError, TemplateName};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("fusion needs at least two explanations, got {0}")]
    TooFewInputs(usize),
    #[error("fusion model returned an empty paragraph")]
    EmptyOutput,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Request(#[from] RequestError),
}

/// Formats explanations as numbered `Text i:` lines.
pub fn format_analyses(explanations: &[String]) -> String {
    explanations
        .iter()
        .enumerate()
        .map(|(i, e)| format!("\nText {}: {}", i + 1, e))
        .collect()
}

/// Merges two or more explanations into one paragraph.
pub fn fuse(explanations: &[String], stage: Stage<'_>) -> Result<String, FusionError> {
    if explanations.len() < 2 {
        return Err(FusionError::TooFewInputs(explanations.len()));
    }
    let analyses = format_analyses(explanations);
    let prompt = stage
        .prompts
        .get(TemplateName::Fusion, stage.language)
        .render(&vars([("analyses", &analyses)]))?;
    let request = ChatRequest::new(
        prompt,
        &stage.config.models.fusion,
        stage.config.temperature,
        stage.config.max_output,
    )?;
    let merged = stage.provider.complete(&request)?.trim().to_string();
    if merged.is_empty() {
        return Err(FusionError::EmptyOutput);
    }
    Ok(merged)
}
