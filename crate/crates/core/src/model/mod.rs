//! Chat-model abstraction, prompt templates and reply parsing.

pub mod audit;
pub mod http;
pub mod parse;
pub mod scripted;
pub mod template;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use audit::AuditedProvider;
pub use http::{HttpProvider, HttpProviderConfig, RetryPolicy};
pub use parse::{parse_decision, parse_tagged, ParseError};
pub use scripted::{ScriptRule, ScriptedProvider};
pub use template::{PromptLibrary, PromptTemplate, RenderedPrompt, TemplateError, TemplateName};

/// Default completion budget in tokens.
pub const DEFAULT_MAX_OUTPUT: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_prompt: String,
    pub user_prompt: String,
    pub model_id: String,
    pub temperature: f32,
    pub max_output: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RequestError {
    #[error("system prompt is empty")]
    EmptySystemPrompt,
    #[error("user prompt is empty")]
    EmptyUserPrompt,
    #[error("temperature {0} outside [0, 1]")]
    Temperature(String),
}

impl ChatRequest {
    pub fn new(
        prompt: RenderedPrompt,
        model_id: impl Into<String>,
        temperature: f32,
        max_output: u32,
    ) -> Result<Self, RequestError> {
        if prompt.system.trim().is_empty() {
            return Err(RequestError::EmptySystemPrompt);
        }
        if prompt.user.trim().is_empty() {
            return Err(RequestError::EmptyUserPrompt);
        }
        if !(0.0..=1.0).contains(&temperature) {
            return Err(RequestError::Temperature(temperature.to_string()));
        }
        Ok(Self {
            system_prompt: prompt.system,
            user_prompt: prompt.user,
            model_id: model_id.into(),
            temperature,
            max_output,
        })
    }

    /// Hex SHA-256 over model id and both prompts.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.model_id, &self.system_prompt, &self.user_prompt] {
            h.update(part.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("network error: {0}")]
    Network(String),
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimit(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("request timed out")]
    Timeout,
    #[error("scripted provider has no response left for this request")]
    ScriptExhausted,
}

impl ProviderError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Network(_) => "network",
            Self::Auth(_) => "auth",
            Self::RateLimit(_) => "rate_limit",
            Self::Malformed(_) => "malformed",
            Self::Timeout => "timeout",
            Self::ScriptExhausted => "script_exhausted",
        }
    }
}

/// A chat-completion backend. Implementations return non-empty text or an error.
pub trait ChatProvider: Send + Sync {
    fn identity(&self) -> &str;

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for Arc<P> {
    fn identity(&self) -> &str {
        (**self).identity()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn identity(&self) -> &str {
        (**self).identity()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(s: &str, u: &str) -> RenderedPrompt {
        RenderedPrompt { system: s.into(), user: u.into() }
    }

    #[test]
    fn request_invariants() {
        assert!(ChatRequest::new(prompt("s", "u"), "m", 0.0, 10).is_ok());
        assert_eq!(
            ChatRequest::new(prompt(" ", "u"), "m", 0.0, 10).unwrap_err(),
            RequestError::EmptySystemPrompt
        );
        assert_eq!(
            ChatRequest::new(prompt("s", ""), "m", 0.0, 10).unwrap_err(),
            RequestError::EmptyUserPrompt
        );
        assert!(ChatRequest::new(prompt("s", "u"), "m", 1.5, 10).is_err());
    }

    #[test]
    fn digest_depends_on_all_parts() {
        let a = ChatRequest::new(prompt("s", "u"), "m", 0.0, 10).unwrap();
        let mut b = a.clone();
        b.model_id = "n".into();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
        assert_eq!(a.digest().len(), 64);
    }
}
