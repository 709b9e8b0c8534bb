//! Command implementations. Each writes to the given sinks and returns an exit code.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use detox_core::evaluation::{evaluate, load_annotations, VariantRule};
use detox_core::ingestion::api::{ApiTransport, Params};
use detox_core::ingestion::{
    build_vocabulary_from_candidates, collect_candidates, default_sources, import_review, CachedProvider,
    CategorySource, CollectOptions, DiskCache, FixtureTransport, HttpTransport, IngestionError, ReviewReport,
    SectionConfig, SourceKind,
};
use detox_core::model::{ChatProvider, ChatRequest, ProviderError};
use detox_core::pipelines::Stage;
use detox_core::{Detector, Language, ResultRecord, Vocabulary};
use serde_json::Value;

use crate::config::{ConfigError, EngineConfig};
use crate::engine;
use crate::error::{exit, CliError, CliResult};
use crate::wire::{input_error_record, render_record, DetectRequest, MatchResponse, MatchView};

fn read_input(path: &Path) -> CliResult<String> {
    let mut s = String::new();
    if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
    } else {
        s = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    }
    Ok(s)
}

fn open_output(path: Option<&Path>) -> CliResult<Option<fs::File>> {
    path.map(|p| fs::File::create(p).with_context(|| format!("creating {}", p.display())))
        .transpose()
        .map_err(Into::into)
}

/// A parsed input line: either a request for the engine or an input error.
enum Item {
    Request { id: String, text: String },
    Invalid(ResultRecord),
}

fn parse_items(input: &str, language: Language) -> Vec<Item> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| match serde_json::from_str::<DetectRequest>(line) {
            Ok(req) => {
                let id = req.id();
                match req.language.as_deref().map(str::parse::<Language>) {
                    Some(Err(e)) => Item::Invalid(input_error_record(id, e.to_string())),
                    Some(Ok(l)) if l != language => {
                        Item::Invalid(input_error_record(id, format!("language {l} is not loaded (engine is {language})")))
                    }
                    _ => Item::Request { id, text: req.text },
                }
            }
            Err(e) => Item::Invalid(input_error_record(format!("line-{}", i + 1), format!("malformed input line: {e}"))),
        })
        .collect()
}

/// Runs the detector over JSON-lines input. Records keep input order.
pub fn detect_jsonl(detector: &Detector, input: &str, parallelism: usize) -> Vec<ResultRecord> {
    let items = parse_items(input, detector.language());
    let requests: Vec<(String, String)> = items
        .iter()
        .filter_map(|it| match it {
            Item::Request { id, text } => Some((id.clone(), text.clone())),
            Item::Invalid(_) => None,
        })
        .collect();
    let mut results = detector.detect_batch(&requests, parallelism).into_iter();
    items
        .into_iter()
        .map(|it| match it {
            Item::Request { .. } => ResultRecord::from(&results.next().expect("one result per request")),
            Item::Invalid(rec) => rec,
        })
        .collect()
}

pub fn outcome_code(records: &[ResultRecord]) -> i32 {
    let failed = records.iter().filter(|r| r.is_error()).count();
    match failed {
        0 => exit::OK,
        n if n == records.len() => exit::FATAL,
        _ => exit::PARTIAL,
    }
}

pub struct DetectArgs {
    pub text: Option<String>,
    pub id: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub explain_only_positive: bool,
}

pub fn detect(config: &EngineConfig, args: &DetectArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    let input = match (&args.text, &args.input) {
        (Some(text), None) => {
            let req = DetectRequest { id: args.id.clone(), text: text.clone(), language: None };
            serde_json::to_string(&req).expect("request serializes")
        }
        (None, Some(path)) => read_input(path)?,
        _ => return Err(CliError::usage("pass exactly one of --text or --input")),
    };
    let detector = engine::detector(config)?;
    let records = detect_jsonl(&detector, &input, config.parallelism);
    let mut file = open_output(args.output.as_deref())?;
    let sink: &mut dyn Write = match file.as_mut() {
        Some(f) => f,
        None => out,
    };
    for rec in &records {
        writeln!(sink, "{}", render_record(rec, args.explain_only_positive)).context("writing results")?;
        for e in &rec.errors {
            writeln!(err, "{}: {e}", rec.id).ok();
        }
    }
    sink.flush().context("writing results")?;
    Ok(outcome_code(&records))
}

pub struct MatchArgs {
    pub text: Option<String>,
    pub input: Option<PathBuf>,
}

pub fn match_terms(config: &EngineConfig, args: &MatchArgs, out: &mut dyn Write) -> CliResult<i32> {
    let input = match (&args.text, &args.input) {
        (Some(text), None) => serde_json::to_string(&DetectRequest { id: None, text: text.clone(), language: None })
            .expect("request serializes"),
        (None, Some(path)) => read_input(path)?,
        _ => return Err(CliError::usage("pass exactly one of --text or --input")),
    };
    let eng = engine::MatchEngine::build(config)?;
    let mut code = exit::OK;
    for item in parse_items(&input, config.language) {
        let line = match item {
            Item::Request { id, text } => match detox_core::find_matches(&text, &eng.vocabulary, eng.lemmatizer.as_ref()) {
                Ok(ms) => serde_json::to_string(&MatchResponse { id, matches: ms.iter().map(MatchView::from).collect() }),
                Err(e) => {
                    code = exit::PARTIAL;
                    serde_json::to_string(&input_error_record(id, e.to_string()))
                }
            },
            Item::Invalid(rec) => {
                code = exit::PARTIAL;
                serde_json::to_string(&rec)
            }
        }
        .expect("serializes");
        writeln!(out, "{line}").context("writing matches")?;
    }
    Ok(code)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
}

pub struct EvaluateArgs {
    pub annotations: PathBuf,
    pub predictions: Option<PathBuf>,
    pub variant_rule: Option<VariantRule>,
    pub format: ReportFormat,
    pub output: Option<PathBuf>,
}

/// Reads `{id, label}` lines; any other field is ignored and a null label marks an errored item.
pub fn read_predictions(text: &str) -> CliResult<HashMap<String, Option<bool>>> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line)
            .map_err(|e| ConfigError::Parse(format!("predictions line {}: {e}", i + 1)))?;
        let id = v.get("id").and_then(Value::as_str).ok_or_else(|| ConfigError::Parse(format!("predictions line {}: no id", i + 1)))?;
        let label = match v.get("label") {
            Some(Value::Bool(b)) => Some(*b),
            Some(Value::Null) | None => None,
            Some(other) => return Err(ConfigError::Parse(format!("predictions line {}: label {other} is not a boolean", i + 1)).into()),
        };
        if out.insert(id.to_string(), label).is_some() {
            return Err(ConfigError::Parse(format!("predictions line {}: duplicate id {id}", i + 1)).into());
        }
    }
    Ok(out)
}

pub fn evaluate_cmd(config: &EngineConfig, args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<i32> {
    let records = load_annotations(&args.annotations).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let predictions = match &args.predictions {
        Some(p) => read_predictions(&read_input(p)?)?,
        None => {
            if let Some(r) = records.iter().find(|r| r.language != config.language) {
                return Err(ConfigError::Invalid(format!(
                    "live evaluation loads one {} vocabulary but item {} is {}",
                    config.language, r.id, r.language
                ))
                .into());
            }
            let detector = engine::detector(config)?;
            let items: Vec<(String, String)> = records.iter().map(|r| (r.id.clone(), r.text.clone())).collect();
            detector
                .detect_batch(&items, config.parallelism)
                .into_iter()
                .zip(&records)
                .map(|(res, r)| (r.id.clone(), res.ok().map(|d| d.label)))
                .collect()
        }
    };
    let rule = args.variant_rule.unwrap_or(config.variant_rule);
    let report = evaluate(&records, &predictions, rule).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let text = match args.format {
        ReportFormat::Table => report.render_table(),
        ReportFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    match open_output(args.output.as_deref())? {
        Some(mut f) => f.write_all(text.as_bytes()),
        None => out.write_all(text.as_bytes()),
    }
    .context("writing report")?;
    Ok(exit::OK)
}

/// Counts requests reaching the wrapped transport.
pub struct CountingTransport {
    inner: Box<dyn ApiTransport>,
    calls: AtomicUsize,
}

impl CountingTransport {
    pub fn new(inner: Box<dyn ApiTransport>) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ApiTransport for CountingTransport {
    fn get(&self, language: Language, params: &Params) -> Result<Value, IngestionError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.get(language, params)
    }
}

/// Counts completions reaching the wrapped provider.
pub struct CountingProvider {
    inner: Arc<dyn ChatProvider>,
    calls: AtomicUsize,
}

impl CountingProvider {
    pub fn new(inner: Arc<dyn ChatProvider>) -> Self {
        Self { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl ChatProvider for CountingProvider {
    fn identity(&self) -> &str {
        self.inner.identity()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}

/// Parses `category:<title>` or `tag:<title>`.
pub fn parse_source(language: Language, spec: &str) -> Result<CategorySource, ConfigError> {
    let (kind, title) = spec
        .split_once(':')
        .ok_or_else(|| ConfigError::Invalid(format!("source {spec:?} must be category:<title> or tag:<title>")))?;
    let kind = match kind.trim() {
        "category" => SourceKind::Category,
        "tag" => SourceKind::Tag,
        other => return Err(ConfigError::Invalid(format!("unknown source kind {other:?}"))),
    };
    CategorySource::new(language, kind, title).map_err(|e| ConfigError::Invalid(e.to_string()))
}

pub struct BuildVocabArgs {
    pub language: Option<Language>,
    pub limit: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildVocabSummary {
    pub vocabulary_path: PathBuf,
    pub review_path: PathBuf,
    pub api_calls: usize,
    pub model_calls: usize,
}

pub fn build_vocab(config: &EngineConfig, args: &BuildVocabArgs, out: &mut dyn Write) -> CliResult<(i32, BuildVocabSummary)> {
    let language = args.language.unwrap_or(config.language);
    let provider = engine::require_provider(config)?;
    let ing = &config.ingestion;
    let sources = if ing.sources.is_empty() {
        default_sources(language)
    } else {
        ing.sources.iter().map(|s| parse_source(language, s)).collect::<Result<_, _>>()?
    };
    let sections = match &ing.sections {
        Some(p) => SectionConfig::load(p).map_err(|e| ConfigError::Invalid(e.to_string()))?,
        None => SectionConfig::builtin(language),
    };
    let transport: Box<dyn ApiTransport> = match args.fixtures.as_ref().or(ing.fixtures.as_ref()) {
        Some(p) => Box::new(FixtureTransport::load(p).map_err(|e| ConfigError::Invalid(e.to_string()))?),
        None => Box::new(
            HttpTransport::new(&ing.api_endpoint, Duration::from_millis(ing.request_delay_ms), Duration::from_secs(30))
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
        ),
    };
    let api = CountingTransport::new(transport);
    let cache = DiskCache::new(&ing.cache_dir);
    let options = CollectOptions { page_size: ing.page_size, limit: args.limit };

    let set = collect_candidates(&api, Some(&cache), &sources, &sections, &options).context("collecting candidates")?;
    for s in &set.per_source {
        writeln!(out, "source {:?}: {} members", s.title, s.members).ok();
    }
    let with_defs = set.candidates.iter().filter(|c| !c.definitions.is_empty()).count();
    writeln!(out, "candidates fetched: {} unique pages, {} kept", set.unique_pages, set.candidates.len()).ok();
    writeln!(out, "candidates with definitions: {with_defs}").ok();
    for (id, msg) in &set.page_errors {
        writeln!(out, "page {id} unavailable: {msg}").ok();
    }

    let counting = Arc::new(CountingProvider::new(provider));
    let cached = CachedProvider::new(counting.clone(), cache);
    let prompts = detox_core::model::PromptLibrary::builtin();
    let stage = Stage { provider: &cached, prompts: &prompts, config: &config.detect, language };
    let lem = engine::lemmatizer(config, language)?;
    let (vocab, review) = build_vocabulary_from_candidates(&set.candidates, stage, lem.as_ref(), config.parallelism)
        .context("building vocabulary")?;
    writeln!(out, "assessed: {} positive, {} failed", review.positives(), review.errors()).ok();
    writeln!(out, "vocabulary entries emitted: {}", vocab.len()).ok();

    let dir = args.out_dir.clone().unwrap_or_else(|| ing.output_dir.clone());
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let vocabulary_path = dir.join(format!("vocabulary.{language}.csv"));
    let review_path = dir.join(format!("review.{language}.csv"));
    vocab.write_csv(&vocabulary_path).context("writing vocabulary")?;
    review.write_csv(&review_path).context("writing review file")?;
    writeln!(out, "wrote {} and {}", vocabulary_path.display(), review_path.display()).ok();
    writeln!(out, "api requests: {}, model requests: {}", api.calls(), counting.calls()).ok();
    let code = if review.errors() > 0 { exit::PARTIAL } else { exit::OK };
    Ok((code, BuildVocabSummary { vocabulary_path, review_path, api_calls: api.calls(), model_calls: counting.calls() }))
}

pub struct ImportReviewArgs {
    pub review: PathBuf,
    pub language: Option<Language>,
    pub output: PathBuf,
}

pub fn import_review_cmd(config: &EngineConfig, args: &ImportReviewArgs, out: &mut dyn Write) -> CliResult<i32> {
    let language = args.language.unwrap_or(config.language);
    let report = ReviewReport::read_csv(&args.review).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let lem = engine::lemmatizer(config, language)?;
    let vocab: Vocabulary = import_review(&report, language, lem.as_ref()).map_err(|e| anyhow!(e))?;
    let jsonl = args.output.extension().is_some_and(|e| e == "jsonl" || e == "json");
    if jsonl { vocab.write_jsonl(&args.output) } else { vocab.write_csv(&args.output) }.context("writing vocabulary")?;
    writeln!(out, "imported {} entries into {}", vocab.len(), args.output.display()).ok();
    Ok(exit::OK)
}

/// Loads a JSON-lines file of records, e.g. a previous `detect` output.
pub fn read_records(path: &Path) -> anyhow::Result<Vec<ResultRecord>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|l| Ok(serde_json::from_str(&l?)?))
        .collect()
}
