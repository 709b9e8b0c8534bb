//! Assembles lemmatizer, provider and detector from an [`EngineConfig`].

use std::sync::Arc;

use anyhow::Context;
use detox_core::matching::lemmatizer::SubprocessLemmatizer;
use detox_core::model::{AuditedProvider, ChatProvider, HttpProvider, ScriptedProvider};
use detox_core::{Detector, Language, Lemmatizer, Vocabulary};

use crate::config::{ConfigError, EngineConfig, LemmatizerConfig, ProviderConfig};
use crate::error::{CliError, CliResult};

pub fn lemmatizer(config: &EngineConfig, language: Language) -> CliResult<Arc<dyn Lemmatizer>> {
    Ok(match &config.lemmatizer {
        LemmatizerConfig::Default => Arc::new(
            detox_core::matching::DefaultLemmatizer::new(language).context("loading lemmatizer tables")?,
        ),
        LemmatizerConfig::External { command } => {
            Arc::new(SubprocessLemmatizer::new(language, command).context("starting external lemmatizer")?)
        }
    })
}

/// The configured provider, wrapped in the audit log when one is set.
/// `None` when no provider is configured.
pub fn provider(config: &EngineConfig) -> CliResult<Option<Arc<dyn ChatProvider>>> {
    let base: Arc<dyn ChatProvider> = match &config.provider {
        ProviderConfig::None => return Ok(None),
        ProviderConfig::Scripted { script } => Arc::new(
            ScriptedProvider::load(script)
                .map_err(|e| ConfigError::Invalid(format!("provider script {}: {e}", script.display())))?,
        ),
        ProviderConfig::Http(http) => Arc::new(
            HttpProvider::new(http.clone()).map_err(|e| ConfigError::Invalid(format!("http provider: {e}")))?,
        ),
    };
    Ok(Some(match &config.audit_log {
        Some(path) => Arc::new(
            AuditedProvider::to_file(base, path)
                .with_context(|| format!("opening audit log {}", path.display()))?,
        ),
        None => base,
    }))
}

pub fn require_provider(config: &EngineConfig) -> CliResult<Arc<dyn ChatProvider>> {
    provider(config)?.ok_or_else(|| {
        ConfigError::Invalid("no model provider configured (set [provider] or DETOX_LLM_ENDPOINT)".into()).into()
    })
}

pub fn vocabulary(config: &EngineConfig, lemmatizer: &dyn Lemmatizer) -> CliResult<Vocabulary> {
    let path = config
        .vocabulary
        .as_ref()
        .ok_or_else(|| CliError::from(ConfigError::Invalid("no vocabulary configured (vocabulary = \"...\" or --vocabulary)".into())))?;
    Vocabulary::load(path, config.language, lemmatizer)
        .map_err(|e| ConfigError::Invalid(format!("vocabulary {}: {e}", path.display())).into())
}

/// Matcher-only state: no provider needed.
pub struct MatchEngine {
    pub vocabulary: Arc<Vocabulary>,
    pub lemmatizer: Arc<dyn Lemmatizer>,
}

impl MatchEngine {
    pub fn build(config: &EngineConfig) -> CliResult<Self> {
        let lemmatizer = lemmatizer(config, config.language)?;
        let vocabulary = Arc::new(vocabulary(config, lemmatizer.as_ref())?);
        Ok(Self { vocabulary, lemmatizer })
    }
}

pub fn detector(config: &EngineConfig) -> CliResult<Detector> {
    let provider = require_provider(config)?;
    let MatchEngine { vocabulary, lemmatizer } = MatchEngine::build(config)?;
    Ok(Detector::new(vocabulary, lemmatizer, provider, config.detect.clone()))
}
