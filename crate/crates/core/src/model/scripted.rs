use std::collections::VecDeque;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, ProviderError};

/// A canned reply selected by request content. Every condition present must hold.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_contains: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub user_contains: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_equals: Option<String>,
    pub response: String,
}

impl ScriptRule {
    pub fn user_contains(needle: &str, response: &str) -> Self {
        Self {
            user_contains: vec![needle.to_string()],
            response: response.to_string(),
            ..Self::default()
        }
    }

    fn matches(&self, req: &ChatRequest) -> bool {
        self.system_contains
            .as_ref()
            .is_none_or(|s| req.system_prompt.contains(s.as_str()))
            && self.user_contains.iter().all(|s| req.user_prompt.contains(s.as_str()))
            && self.user_equals.as_ref().is_none_or(|s| req.user_prompt == *s)
    }
}

/// On-disk form of a script.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default)]
    pub identity: Option<String>,
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
    #[serde(default)]
    pub sequence: Vec<String>,
}

/// Offline provider replaying canned responses.
///
/// Rules are tried first, in order, and are reusable. Requests no rule
/// matches consume the sequence front to back.
#[derive(Debug)]
pub struct ScriptedProvider {
    identity: String,
    rules: Vec<ScriptRule>,
    sequence: Mutex<VecDeque<String>>,
    log: Mutex<Vec<ChatRequest>>,
}

impl ScriptedProvider {
    pub fn from_script(script: Script) -> Self {
        Self {
            identity: script.identity.unwrap_or_else(|| "scripted".to_string()),
            rules: script.rules,
            sequence: Mutex::new(script.sequence.into()),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn sequence<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_script(Script {
            sequence: responses.into_iter().map(Into::into).collect(),
            ..Script::default()
        })
    }

    pub fn keyed(rules: Vec<ScriptRule>) -> Self {
        Self::from_script(Script { rules, ..Script::default() })
    }

    pub fn load(path: &Path) -> Result<Self, std::io::Error> {
        let raw = std::fs::read_to_string(path)?;
        let script: Script = serde_json::from_str(&raw)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        Ok(Self::from_script(script))
    }

    /// Every request issued so far, in order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.log.lock().expect("log lock").clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().expect("log lock").len()
    }
}

impl ChatProvider for ScriptedProvider {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.log.lock().expect("log lock").push(request.clone());
        let response = match self.rules.iter().find(|r| r.matches(request)) {
            Some(rule) => rule.response.clone(),
            None => self
                .sequence
                .lock()
                .expect("sequence lock")
                .pop_front()
                .ok_or(ProviderError::ScriptExhausted)?,
        };
        if response.trim().is_empty() {
            return Err(ProviderError::Malformed("empty completion".into()));
        }
        Ok(response)
    }
}
