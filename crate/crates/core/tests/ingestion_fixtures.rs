use std::collections::BTreeMap;
use std::path::PathBuf;

use detox_core::ingestion::{
    collect_candidates, CategorySource, CollectOptions, DiskCache, FixtureTransport, SectionConfig, SourceKind,
};
use detox_core::Language;
use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/wiktionary")
}

fn expected(lang: &str) -> Value {
    let raw = std::fs::read_to_string(fixtures().join("expected.json")).unwrap();
    serde_json::from_str::<Value>(&raw).unwrap()[lang].clone()
}

fn sources(language: Language, spec: &Value) -> Vec<CategorySource> {
    spec["sources"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| {
            let kind = match s[0].as_str().unwrap() {
                "category" => SourceKind::Category,
                _ => SourceKind::Tag,
            };
            CategorySource::new(language, kind, s[1].as_str().unwrap()).unwrap()
        })
        .collect()
}

fn check(language: Language) {
    let spec = expected(language.tag());
    let api = FixtureTransport::load(&fixtures().join(format!("{}.json", language.tag()))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cache = DiskCache::new(dir.path());
    let srcs = sources(language, &spec);
    let sections = SectionConfig::builtin(language);
    let set = collect_candidates(&api, Some(&cache), &srcs, &sections, &CollectOptions::default()).unwrap();

    let per_source: Vec<u64> = set.per_source.iter().map(|s| s.members as u64).collect();
    let want: Vec<u64> = spec["per_source"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(per_source, want);
    assert_eq!(set.unique_pages as u64, spec["unique_pages"].as_u64().unwrap());

    let got: BTreeMap<String, Vec<String>> =
        set.candidates.iter().map(|c| (c.term.clone(), c.definitions.clone())).collect();
    let want: BTreeMap<String, Vec<String>> = serde_json::from_value(spec["definitions"].clone()).unwrap();
    assert_eq!(got, want);

    let calls = api.call_count();
    let again = collect_candidates(&api, Some(&cache), &srcs, &sections, &CollectOptions::default()).unwrap();
    assert_eq!(api.call_count(), calls, "re-run must not touch the API");
    assert_eq!(again, set);
}

#[test]
fn english_fixture() {
    check(Language::En);
}

#[test]
fn greek_category_and_tag_union() {
    check(Language::El);
}
