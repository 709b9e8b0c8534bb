//! Engine configuration: TOML file, environment overrides and validation.

use std::path::{Path, PathBuf};

use detox_core::evaluation::VariantRule;
use detox_core::model::http::{ENDPOINT_ENV, KEY_ENV};
use detox_core::model::HttpProviderConfig;
use detox_core::{DetectConfig, Language};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VOCABULARY_ENV: &str = "DETOX_VOCABULARY";
pub const LANGUAGE_ENV: &str = "DETOX_LANGUAGE";
pub const BIND_ENV: &str = "DETOX_BIND";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(String),
    #[error("{what} not found: {path}")]
    MissingPath { what: &'static str, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LemmatizerConfig {
    /// Bundled rule tables.
    Default,
    /// External process reading text on stdin and printing JSON tokens.
    External { command: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    /// No provider; commands needing a model fail with a configuration error.
    None,
    /// Canned replies from a JSON script file.
    Scripted { script: PathBuf },
    Http(HttpProviderConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestionConfig {
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub page_size: u32,
    pub request_delay_ms: u64,
    pub api_endpoint: String,
    /// Recorded API exchanges to use instead of the live API.
    pub fixtures: Option<PathBuf>,
    /// `kind:title` entries, e.g. `category:Category:English vulgarities`. Empty uses the built-in sources.
    pub sources: Vec<String>,
    /// Part-of-speech heading file. Unset uses the built-in one.
    pub sections: Option<PathBuf>,
}

impl Default for IngestionConfig {
    fn default() -> Self {
        Self {
            cache_dir: "cache".into(),
            output_dir: "vocabulary-build".into(),
            page_size: 500,
            request_delay_ms: 1000,
            api_endpoint: detox_core::ingestion::HttpTransport::DEFAULT_ENDPOINT.into(),
            fixtures: None,
            sources: Vec::new(),
            sections: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self { bind: "127.0.0.1:8080".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub language: Language,
    /// Vocabulary file (CSV or JSON lines). Required by detect, match and serve.
    pub vocabulary: Option<PathBuf>,
    pub parallelism: usize,
    pub variant_rule: VariantRule,
    /// JSON-lines log of every model call.
    pub audit_log: Option<PathBuf>,
    pub lemmatizer: LemmatizerConfig,
    pub provider: ProviderConfig,
    pub detect: DetectConfig,
    pub ingestion: IngestionConfig,
    pub service: ServiceConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            language: Language::En,
            vocabulary: None,
            parallelism: 4,
            variant_rule: VariantRule::Literal,
            audit_log: None,
            lemmatizer: LemmatizerConfig::Default,
            provider: ProviderConfig::None,
            detect: DetectConfig::default(),
            ingestion: IngestionConfig::default(),
            service: ServiceConfig::default(),
        }
    }
}

/// Reads environment variables through a lookup function so tests stay hermetic.
pub type EnvLookup<'a> = &'a dyn Fn(&str) -> Option<String>;

pub fn process_env(key: &str) -> Option<String> {
    std::env::var(key).ok().filter(|v| !v.is_empty())
}

impl EngineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Defaults, then the file if given, then environment overrides.
    /// Relative paths in the file resolve against the file's directory.
    pub fn load(path: Option<&Path>, env: EnvLookup<'_>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?;
                let mut c = Self::from_toml(&text)?;
                if let Some(dir) = p.parent() {
                    c.rebase(dir);
                }
                c
            }
            None => Self::default(),
        };
        config.apply_env(env)?;
        Ok(config)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(p) = self.vocabulary.as_mut() {
            fix(p);
        }
        if let Some(p) = self.audit_log.as_mut() {
            fix(p);
        }
        if let ProviderConfig::Scripted { script } = &mut self.provider {
            fix(script);
        }
        fix(&mut self.ingestion.cache_dir);
        fix(&mut self.ingestion.output_dir);
        if let Some(p) = self.ingestion.fixtures.as_mut() {
            fix(p);
        }
        if let Some(p) = self.ingestion.sections.as_mut() {
            fix(p);
        }
    }

    pub fn apply_env(&mut self, env: EnvLookup<'_>) -> Result<(), ConfigError> {
        if let Some(lang) = env(LANGUAGE_ENV) {
            self.language = lang.parse().map_err(|e| ConfigError::Invalid(format!("{LANGUAGE_ENV}: {e}")))?;
        }
        if let Some(v) = env(VOCABULARY_ENV) {
            self.vocabulary = Some(v.into());
        }
        if let Some(b) = env(BIND_ENV) {
            self.service.bind = b;
        }
        let endpoint = env(ENDPOINT_ENV);
        let key = env(KEY_ENV);
        if endpoint.is_some() && matches!(self.provider, ProviderConfig::None) {
            self.provider = ProviderConfig::Http(HttpProviderConfig::default());
        }
        if let ProviderConfig::Http(http) = &mut self.provider {
            if let Some(e) = endpoint {
                http.endpoint = e;
            }
            if key.is_some() {
                http.api_key = key;
            }
        }
        Ok(())
    }

    /// Checks invariants that do not depend on which command runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.parallelism == 0 {
            return Err(ConfigError::Invalid("parallelism must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.detect.temperature) {
            return Err(ConfigError::Invalid(format!("temperature {} outside [0, 1]", self.detect.temperature)));
        }
        if !(1..=500).contains(&self.ingestion.page_size) {
            return Err(ConfigError::Invalid(format!("page_size {} outside [1, 500]", self.ingestion.page_size)));
        }
        if let Some(v) = &self.vocabulary {
            if !v.exists() {
                return Err(ConfigError::MissingPath { what: "vocabulary file", path: v.clone() });
            }
        }
        match &self.provider {
            ProviderConfig::Scripted { script } if !script.exists() => {
                return Err(ConfigError::MissingPath { what: "provider script", path: script.clone() });
            }
            ProviderConfig::Http(h) if h.endpoint.trim().is_empty() => {
                return Err(ConfigError::Invalid(format!("http provider needs an endpoint (or {ENDPOINT_ENV})")));
            }
            _ => {}
        }
        if let LemmatizerConfig::External { command } = &self.lemmatizer {
            if command.is_empty() {
                return Err(ConfigError::Invalid("external lemmatizer needs a command".into()));
            }
        }
        if let Some(f) = &self.ingestion.fixtures {
            if !f.exists() {
                return Err(ConfigError::MissingPath { what: "ingestion fixtures", path: f.clone() });
            }
        }
        Ok(())
    }

    /// The effective configuration as TOML. Secrets are never printed.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn empty_file_is_fully_specified() {
        let c = EngineConfig::from_toml("").unwrap();
        assert_eq!(c, EngineConfig::default());
        let printed = c.to_toml();
        for key in ["language", "parallelism", "variant_rule", "[provider]", "[detect]", "[detect.models]", "[ingestion]", "[service]", "[lemmatizer]"] {
            assert!(printed.contains(key), "{key} missing in\n{printed}");
        }
        assert_eq!(EngineConfig::from_toml(&printed).unwrap(), c);
    }

    #[test]
    fn env_overrides() {
        let env = |k: &str| match k {
            "DETOX_LLM_ENDPOINT" => Some("https://llm.example/v1/chat".to_string()),
            "DETOX_LLM_KEY" => Some("secret".to_string()),
            "DETOX_LANGUAGE" => Some("el".to_string()),
            _ => None,
        };
        let mut c = EngineConfig::default();
        c.apply_env(&env).unwrap();
        assert_eq!(c.language, Language::El);
        let ProviderConfig::Http(h) = &c.provider else { panic!("expected http provider") };
        assert_eq!(h.endpoint, "https://llm.example/v1/chat");
        assert_eq!(h.api_key.as_deref(), Some("secret"));
        assert!(!c.to_toml().contains("secret"));
    }

    #[test]
    fn validation() {
        let mut c = EngineConfig { parallelism: 0, ..EngineConfig::default() };
        assert!(c.validate().is_err());
        c.parallelism = 1;
        c.vocabulary = Some("/nonexistent/vocab.csv".into());
        assert!(matches!(c.validate(), Err(ConfigError::MissingPath { .. })));
        c.vocabulary = None;
        c.provider = ProviderConfig::Http(HttpProviderConfig::default());
        assert!(c.validate().is_err());
        c.provider = ProviderConfig::None;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn unknown_keys_and_bad_language_rejected() {
        assert!(EngineConfig::from_toml("langauge = \"en\"").is_err());
        assert!(EngineConfig::from_toml("language = \"de\"").is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("detox.toml");
        std::fs::write(&path, "vocabulary = \"v.csv\"\n[provider]\nkind = \"scripted\"\nscript = \"s.json\"\n").unwrap();
        let c = EngineConfig::load(Some(&path), &no_env).unwrap();
        assert_eq!(c.vocabulary.unwrap(), dir.path().join("v.csv"));
        assert_eq!(c.provider, ProviderConfig::Scripted { script: dir.path().join("s.json") });
    }
}
