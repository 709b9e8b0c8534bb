use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::{ChatProvider, ChatRequest, ProviderError};

#[derive(Serialize)]
struct AuditLine<'a> {
    request_hash: String,
    provider: &'a str,
    model_id: &'a str,
    latency_ms: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    response: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Appends one JSON line per completion (request hash, response, latency).
pub struct AuditedProvider<P> {
    inner: P,
    sink: Mutex<Box<dyn Write + Send>>,
}

impl<P: ChatProvider> AuditedProvider<P> {
    pub fn to_file(inner: P, path: &Path) -> io::Result<Self> {
        let file: File = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self::to_writer(inner, Box::new(file)))
    }

    pub fn to_writer(inner: P, sink: Box<dyn Write + Send>) -> Self {
        Self { inner, sink: Mutex::new(sink) }
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: ChatProvider> ChatProvider for AuditedProvider<P> {
    fn identity(&self) -> &str {
        self.inner.identity()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let started = Instant::now();
        let result = self.inner.complete(request);
        let line = AuditLine {
            request_hash: request.digest(),
            provider: self.inner.identity(),
            model_id: &request.model_id,
            latency_ms: started.elapsed().as_millis(),
            response: result.as_ref().ok().map(String::as_str),
            error: result.as_ref().err().map(ToString::to_string),
        };
        let mut sink = self.sink.lock().expect("audit lock");
        // audit failures must not change the completion outcome
        let _ = serde_json::to_writer(&mut *sink, &line);
        let _ = sink.write_all(b"\n");
        let _ = sink.flush();
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RenderedPrompt, ScriptedProvider};

    #[test]
    fn writes_one_line_per_call() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.jsonl");
        let p = AuditedProvider::to_file(ScriptedProvider::sequence(["ok"]), &path).unwrap();
        let req = ChatRequest::new(RenderedPrompt { system: "s".into(), user: "u".into() }, "m", 0.0, 8).unwrap();
        assert_eq!(p.complete(&req).unwrap(), "ok");
        assert!(p.complete(&req).is_err());
        let lines: Vec<serde_json::Value> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["response"], "ok");
        assert_eq!(lines[0]["request_hash"], req.digest());
        assert!(lines[1]["error"].as_str().unwrap().contains("no response left"));
    }
}
