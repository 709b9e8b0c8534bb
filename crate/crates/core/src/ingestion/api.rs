//! MediaWiki API access: transports, member listing with continuation, page fetch.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CategorySource, IngestionError};
use crate::language::Language;

pub type Params = BTreeMap<String, String>;

/// Largest page the API serves to ordinary clients.
pub const MAX_PAGE_SIZE: u32 = 500;

/// Issues one GET against a wiki's `api.php` and returns the decoded JSON.
pub trait ApiTransport: Send + Sync {
    fn get(&self, language: Language, params: &Params) -> Result<Value, IngestionError>;
}

fn api_error(body: &Value) -> Option<IngestionError> {
    let err = body.get("error")?;
    Some(IngestionError::Api {
        code: err.get("code").and_then(Value::as_str).unwrap_or("unknown").to_string(),
        message: err.get("info").and_then(Value::as_str).unwrap_or_default().to_string(),
    })
}

/// Live transport with a fixed delay between consecutive requests.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint_template: String,
    delay: Duration,
    last: Mutex<Option<Instant>>,
}

impl HttpTransport {
    pub const DEFAULT_ENDPOINT: &'static str = "https://{lang}.wiktionary.org/w/api.php";

    /// `endpoint_template` may contain `{lang}`, replaced by the wiki's language tag.
    pub fn new(endpoint_template: &str, delay: Duration, timeout: Duration) -> Result<Self, IngestionError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("detox/", env!("CARGO_PKG_VERSION"), " (vocabulary ingestion)"))
            .timeout(timeout)
            .build()
            .map_err(|e| IngestionError::Network(e.to_string()))?;
        Ok(Self {
            client,
            endpoint_template: endpoint_template.to_string(),
            delay,
            last: Mutex::new(None),
        })
    }

    fn pace(&self) {
        let mut last = self.last.lock().expect("pace lock");
        if let Some(t) = *last {
            let since = t.elapsed();
            if since < self.delay {
                std::thread::sleep(self.delay - since);
            }
        }
        *last = Some(Instant::now());
    }
}

impl ApiTransport for HttpTransport {
    fn get(&self, language: Language, params: &Params) -> Result<Value, IngestionError> {
        self.pace();
        let url = self.endpoint_template.replace("{lang}", language.tag());
        let resp = self
            .client
            .get(&url)
            .query(params)
            .send()
            .map_err(|e| IngestionError::Network(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| IngestionError::Network(e.to_string()))?;
        if !status.is_success() {
            return Err(IngestionError::Api { code: status.as_u16().to_string(), message: text });
        }
        let body: Value = serde_json::from_str(&text)
            .map_err(|e| IngestionError::Api { code: "invalid_json".into(), message: e.to_string() })?;
        match api_error(&body) {
            Some(e) => Err(e),
            None => Ok(body),
        }
    }
}

/// One recorded request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedCall {
    pub language: Language,
    pub params: Params,
    pub response: Value,
}

/// Offline transport answering from recorded exchanges. Unknown requests are errors.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    calls: Vec<RecordedCall>,
    count: AtomicUsize,
}

impl FixtureTransport {
    pub fn new(calls: Vec<RecordedCall>) -> Self {
        Self { calls, count: AtomicUsize::new(0) }
    }

    /// Reads a JSON array of recorded calls.
    pub fn load(path: &Path) -> Result<Self, IngestionError> {
        let raw = std::fs::read_to_string(path).map_err(|e| IngestionError::io(path, e))?;
        let calls: Vec<RecordedCall> = serde_json::from_str(&raw)
            .map_err(|e| IngestionError::Fixture(format!("{}: {e}", path.display())))?;
        Ok(Self::new(calls))
    }

    /// Requests served so far.
    pub fn call_count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }
}

impl ApiTransport for FixtureTransport {
    fn get(&self, language: Language, params: &Params) -> Result<Value, IngestionError> {
        self.count.fetch_add(1, Ordering::SeqCst);
        let call = self
            .calls
            .iter()
            .find(|c| c.language == language && c.params == *params)
            .ok_or_else(|| IngestionError::Fixture(format!("no recorded response for {language} {params:?}")))?;
        match api_error(&call.response) {
            Some(e) => Err(e),
            None => Ok(call.response.clone()),
        }
    }
}

impl<T: ApiTransport + ?Sized> ApiTransport for &T {
    fn get(&self, language: Language, params: &Params) -> Result<Value, IngestionError> {
        (**self).get(language, params)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Member {
    pub title: String,
    pub page_id: u64,
    /// MediaWiki namespace number; 0 is the main namespace.
    pub ns: i64,
}

fn member(v: &Value) -> Option<Member> {
    Some(Member {
        title: v.get("title")?.as_str()?.to_string(),
        page_id: v.get("pageid")?.as_u64()?,
        ns: v.get("ns").and_then(Value::as_i64).unwrap_or(0),
    })
}

fn check_page_size(page_size: u32) -> Result<(), IngestionError> {
    if (1..=MAX_PAGE_SIZE).contains(&page_size) {
        Ok(())
    } else {
        Err(IngestionError::InvalidPageSize(page_size))
    }
}

fn params<const N: usize>(pairs: [(&str, &str); N]) -> Params {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Repeats `base` until the response has no `continue` block, collecting
/// members with `extract` and dropping repeated page ids.
fn paginate(
    api: &dyn ApiTransport,
    language: Language,
    base: Params,
    extract: impl Fn(&Value) -> Result<Vec<Member>, IngestionError>,
) -> Result<Vec<Member>, IngestionError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut request = base.clone();
    loop {
        let body = api.get(language, &request)?;
        for m in extract(&body)? {
            if seen.insert(m.page_id) {
                out.push(m);
            }
        }
        let Some(cont) = body.get("continue").and_then(Value::as_object) else {
            return Ok(out);
        };
        request = base.clone();
        for (k, v) in cont {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            request.insert(k.clone(), v);
        }
    }
}

fn malformed(what: &str) -> IngestionError {
    IngestionError::Api { code: "unexpected_shape".into(), message: what.to_string() }
}

/// Lists every member of a category.
pub fn fetch_category_members(
    api: &dyn ApiTransport,
    source: &CategorySource,
    page_size: u32,
) -> Result<Vec<Member>, IngestionError> {
    check_page_size(page_size)?;
    let limit = page_size.to_string();
    let base = params([
        ("action", "query"),
        ("list", "categorymembers"),
        ("cmtitle", &source.title),
        ("cmprop", "title|ids"),
        ("format", "json"),
        ("cmlimit", &limit),
    ]);
    paginate(api, source.language, base, |body| {
        let Some(list) = body.pointer("/query/categorymembers") else {
            // An empty or missing category comes back without a query block.
            return Ok(Vec::new());
        };
        let list = list.as_array().ok_or_else(|| malformed("categorymembers is not an array"))?;
        list.iter().map(|v| member(v).ok_or_else(|| malformed("bad category member"))).collect()
    })
}

/// Lists every page linking to `term_page`.
pub fn fetch_linkhere_members(
    api: &dyn ApiTransport,
    language: Language,
    term_page: &str,
    page_size: u32,
) -> Result<Vec<Member>, IngestionError> {
    check_page_size(page_size)?;
    let limit = page_size.to_string();
    let base = params([
        ("action", "query"),
        ("prop", "linkshere"),
        ("titles", term_page),
        ("lhprop", "title|pageid"),
        ("format", "json"),
        ("lhlimit", &limit),
    ]);
    paginate(api, language, base, |body| {
        let Some(pages) = body.pointer("/query/pages").and_then(Value::as_object) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for page in pages.values() {
            if let Some(links) = page.get("linkshere").and_then(Value::as_array) {
                for l in links {
                    out.push(member(l).ok_or_else(|| malformed("bad linkshere entry"))?);
                }
            }
        }
        Ok(out)
    })
}

/// Members of any source kind.
pub fn fetch_source_members(
    api: &dyn ApiTransport,
    source: &CategorySource,
    page_size: u32,
) -> Result<Vec<Member>, IngestionError> {
    match source.kind {
        super::SourceKind::Category => fetch_category_members(api, source, page_size),
        super::SourceKind::Tag => fetch_linkhere_members(api, source.language, &source.title, page_size),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub page_id: u64,
    pub title: String,
    pub html: String,
}

pub fn page_params(page_id: u64) -> Params {
    let id = page_id.to_string();
    params([
        ("action", "parse"),
        ("pageid", &id),
        ("prop", "text|revid"),
        ("redirects", "1"),
        ("format", "json"),
    ])
}

/// Fetches the rendered HTML of a page.
pub fn fetch_page(api: &dyn ApiTransport, language: Language, page_id: u64) -> Result<Page, IngestionError> {
    let body = api.get(language, &page_params(page_id))?;
    let parse = body.get("parse").ok_or_else(|| malformed("no parse block"))?;
    let html = match parse.get("text") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Object(o)) => o.get("*").and_then(Value::as_str).unwrap_or_default().to_string(),
        _ => return Err(malformed("no page text")),
    };
    Ok(Page {
        page_id: parse.get("pageid").and_then(Value::as_u64).unwrap_or(page_id),
        title: parse.get("title").and_then(Value::as_str).unwrap_or_default().to_string(),
        html,
    })
}
