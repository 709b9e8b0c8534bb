//! On-disk cache making ingestion re-runs free of network traffic.
//!
//! Layout under the root: `<lang>/<page_id>.html` for pages,
//! `<lang>/members/<key>.json` for source listings and
//! `responses/<digest>.txt` for model replies.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::api::Member;
use super::{CategorySource, IngestionError};
use crate::language::Language;
use crate::model::{ChatProvider, ChatRequest, ProviderError};

#[derive(Debug, Clone)]
pub struct DiskCache {
    root: PathBuf,
}

fn write_atomic(path: &Path, data: &[u8]) -> Result<(), IngestionError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| IngestionError::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, data).map_err(|e| IngestionError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| IngestionError::io(path, e))
}

fn read_if_present(path: &Path) -> Result<Option<String>, IngestionError> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(IngestionError::io(path, e)),
    }
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn page_path(&self, language: Language, page_id: u64) -> PathBuf {
        self.root.join(language.tag()).join(format!("{page_id}.html"))
    }

    fn members_path(&self, source: &CategorySource) -> PathBuf {
        let mut h = Sha256::new();
        h.update(format!("{:?}\0{}", source.kind, source.title).as_bytes());
        let key = &hex::encode(h.finalize())[..16];
        self.root.join(source.language.tag()).join("members").join(format!("{key}.json"))
    }

    fn response_path(&self, digest: &str) -> PathBuf {
        self.root.join("responses").join(format!("{digest}.txt"))
    }

    pub fn page(&self, language: Language, page_id: u64) -> Result<Option<String>, IngestionError> {
        read_if_present(&self.page_path(language, page_id))
    }

    pub fn put_page(&self, language: Language, page_id: u64, html: &str) -> Result<(), IngestionError> {
        write_atomic(&self.page_path(language, page_id), html.as_bytes())
    }

    pub fn members(&self, source: &CategorySource) -> Result<Option<Vec<Member>>, IngestionError> {
        let path = self.members_path(source);
        match read_if_present(&path)? {
            Some(raw) => serde_json::from_str(&raw)
                .map(Some)
                .map_err(|e| IngestionError::Fixture(format!("{}: {e}", path.display()))),
            None => Ok(None),
        }
    }

    pub fn put_members(&self, source: &CategorySource, members: &[Member]) -> Result<(), IngestionError> {
        let json = serde_json::to_vec_pretty(members).expect("members serialize");
        write_atomic(&self.members_path(source), &json)
    }

    pub fn response(&self, digest: &str) -> Result<Option<String>, IngestionError> {
        read_if_present(&self.response_path(digest))
    }

    pub fn put_response(&self, digest: &str, text: &str) -> Result<(), IngestionError> {
        write_atomic(&self.response_path(digest), text.as_bytes())
    }
}

/// Replays cached replies by request digest and stores new ones.
pub struct CachedProvider<P> {
    inner: P,
    cache: DiskCache,
}

impl<P: ChatProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: DiskCache) -> Self {
        Self { inner, cache }
    }
}

impl<P: ChatProvider> ChatProvider for CachedProvider<P> {
    fn identity(&self) -> &str {
        self.inner.identity()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let digest = request.digest();
        let cached = self.cache.response(&digest).map_err(|e| ProviderError::Network(e.to_string()))?;
        if let Some(text) = cached {
            return Ok(text);
        }
        let text = self.inner.complete(request)?;
        self.cache
            .put_response(&digest, &text)
            .map_err(|e| ProviderError::Network(e.to_string()))?;
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::SourceKind;
    use crate::model::{RenderedPrompt, ScriptedProvider};

    #[test]
    fn page_layout() {
        let dir = tempfile::tempdir().unwrap();
        let c = DiskCache::new(dir.path());
        assert_eq!(c.page(Language::El, 42).unwrap(), None);
        c.put_page(Language::El, 42, "<p>x</p>").unwrap();
        assert!(dir.path().join("el/42.html").is_file());
        assert_eq!(c.page(Language::El, 42).unwrap().as_deref(), Some("<p>x</p>"));
    }

    #[test]
    fn members_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = DiskCache::new(dir.path());
        let s = CategorySource::new(Language::En, SourceKind::Category, "Category:English vulgarities").unwrap();
        let m = vec![Member { title: "a".into(), page_id: 1, ns: 0 }];
        assert_eq!(c.members(&s).unwrap(), None);
        c.put_members(&s, &m).unwrap();
        assert_eq!(c.members(&s).unwrap(), Some(m));
    }

    #[test]
    fn provider_replays() {
        let dir = tempfile::tempdir().unwrap();
        let req = ChatRequest::new(RenderedPrompt { system: "s".into(), user: "u".into() }, "m", 0.0, 8).unwrap();
        let first = CachedProvider::new(ScriptedProvider::sequence(["reply"]), DiskCache::new(dir.path()));
        assert_eq!(first.complete(&req).unwrap(), "reply");
        let inner = ScriptedProvider::sequence(Vec::<String>::new());
        let second = CachedProvider::new(&inner, DiskCache::new(dir.path()));
        assert_eq!(second.complete(&req).unwrap(), "reply");
        assert_eq!(inner.request_count(), 0);
    }
}
