//! OpenAI-compatible chat-completion client.
//!
//! Request body: `{model, messages: [{role: "system", ..}, {role: "user", ..}],
//! temperature, max_tokens}`. The completion text is read from a configurable
//! dot path into the response JSON (`choices.0.message.content` by default).

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ChatProvider, ChatRequest, ProviderError};

pub const ENDPOINT_ENV: &str = "DETOX_LLM_ENDPOINT";
pub const KEY_ENV: &str = "DETOX_LLM_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            initial_backoff_ms: 500,
            max_backoff_ms: 8_000,
        }
    }
}

impl RetryPolicy {
    /// Exponential delay before retry number `attempt` (0-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let ms = self
            .initial_backoff_ms
            .saturating_mul(1u64 << attempt.min(20))
            .min(self.max_backoff_ms);
        Duration::from_millis(ms)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpProviderConfig {
    pub endpoint: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    /// Used when a request carries an empty model id.
    pub model_id: String,
    pub response_path: String,
    pub timeout_secs: u64,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key: None,
            model_id: String::new(),
            response_path: "choices.0.message.content".into(),
            timeout_secs: 60,
            max_concurrency: 4,
            retry: RetryPolicy::default(),
        }
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Limiter {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self { available: Mutex::new(n.max(1)), freed: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().expect("limiter lock");
        while *n == 0 {
            n = self.freed.wait(n).expect("limiter lock");
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().expect("limiter lock") += 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub struct HttpProvider {
    config: HttpProviderConfig,
    identity: String,
    client: Client,
    limiter: Limiter,
}

enum Attempt {
    Done(String),
    Retry(ProviderError, Option<Duration>),
    Fail(ProviderError),
}

/// Follows `a.0.b`-style paths through objects and arrays.
pub fn lookup_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').filter(|s| !s.is_empty()).try_fold(value, |v, seg| match v {
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
        Value::Object(map) => map.get(seg),
        _ => None,
    })
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Result<Self, ProviderError> {
        if config.endpoint.trim().is_empty() {
            return Err(ProviderError::Network("no endpoint configured".into()));
        }
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| ProviderError::Network(e.to_string()))?;
        let identity = format!("http:{}@{}", config.model_id, config.endpoint);
        let limiter = Limiter::new(config.max_concurrency);
        Ok(Self { config, identity, client, limiter })
    }

    pub fn body(&self, request: &ChatRequest) -> Value {
        let model = if request.model_id.is_empty() {
            &self.config.model_id
        } else {
            &request.model_id
        };
        json!({
            "model": model,
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_output,
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut builder = self.client.post(&self.config.endpoint).json(body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = match builder.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Retry(ProviderError::Timeout, None),
            Err(e) => return Attempt::Retry(ProviderError::Network(e.to_string()), None),
        };
        let status = response.status();
        let retry_after = response
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match response.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Retry(ProviderError::Timeout, None),
            Err(e) => return Attempt::Retry(ProviderError::Network(e.to_string()), None),
        };
        if status == StatusCode::TOO_MANY_REQUESTS {
            return Attempt::Retry(ProviderError::RateLimit(snippet(&text)), retry_after);
        }
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Attempt::Fail(ProviderError::Auth(format!("HTTP {status}")));
        }
        if status.is_server_error() {
            return Attempt::Retry(ProviderError::Network(format!("HTTP {status}")), retry_after);
        }
        if !status.is_success() {
            return Attempt::Fail(ProviderError::Malformed(format!("HTTP {status}: {}", snippet(&text))));
        }
        let parsed: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fail(ProviderError::Malformed(format!("body is not JSON: {e}"))),
        };
        match lookup_path(&parsed, &self.config.response_path).and_then(Value::as_str) {
            Some(s) if !s.trim().is_empty() => Attempt::Done(s.to_string()),
            Some(_) => Attempt::Fail(ProviderError::Malformed("empty completion".into())),
            None => Attempt::Fail(ProviderError::Malformed(format!(
                "no string at path {:?}",
                self.config.response_path
            ))),
        }
    }
}

fn snippet(s: &str) -> String {
    s.chars().take(200).collect()
}

impl ChatProvider for HttpProvider {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let _permit = self.limiter.acquire();
        let body = self.body(request);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fail(e) => return Err(e),
                Attempt::Retry(e, _) if attempt >= self.config.retry.max_retries => return Err(e),
                Attempt::Retry(_, hint) => {
                    let delay = self.config.retry.backoff(attempt);
                    let delay = hint
                        .map_or(delay, |h| h.max(delay))
                        .min(Duration::from_millis(self.config.retry.max_backoff_ms));
                    thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}
