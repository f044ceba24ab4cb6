//! Subcommand implementations. Each is a thin wrapper over the library.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use depsearch::bootstrap::{self, BootstrapConfig, Verdict};
use depsearch::corpus::{self, ParseMode, ParseOptions, PosColumn};
use depsearch::engine::{self, CorpusIndex};
use depsearch::extractor;
use depsearch::par::Execution;
use depsearch::patterns::{self, Pattern};
use depsearch::querylang::{self, Role};
use depsearch::synth::{self, SynthSpec};
use depsearch::{Corpus, Sentence};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::AppError;

pub type Result<T> = std::result::Result<T, AppError>;

pub fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| AppError::new(500, "io", e.to_string()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

pub fn parse_options(lenient: bool, pos: PosColumn) -> ParseOptions {
    ParseOptions { mode: if lenient { ParseMode::Lenient } else { ParseMode::Strict }, pos }
}

/// Sentences from a corpus snapshot (`.jsonl`) or a CoNLL-U file.
pub fn load_sentences(path: &Path, options: ParseOptions) -> Result<Vec<Sentence>> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        return Ok(corpus::load_corpus(path)?);
    }
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    Ok(corpus::parse_conllu(BufReader::new(file), options)?)
}

pub fn load_patterns(path: &Path) -> Result<Vec<Pattern>> {
    Ok(patterns::patterns_from_json(&read_text(path)?)?)
}

/// The pattern named `id`, or the only pattern in the file.
pub fn select_pattern(patterns: Vec<Pattern>, id: Option<&str>) -> Result<Pattern> {
    match id {
        Some(id) => patterns
            .into_iter()
            .find(|p| p.id == id)
            .ok_or_else(|| AppError::not_found(format!("no pattern {id}"))),
        None if patterns.len() == 1 => Ok(patterns.into_iter().next().unwrap()),
        None => Err(AppError::bad_request(
            "usage",
            format!("file holds {} patterns; pick one with --id", patterns.len()),
        )),
    }
}

pub fn ingest(inputs: &[PathBuf], out: &Path, options: ParseOptions) -> Result<()> {
    let mut sentences = Vec::new();
    for path in inputs {
        sentences.extend(load_sentences(path, options)?);
    }
    let corpus = Corpus::new(sentences)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    corpus::save_corpus(corpus.sentences(), out)?;
    print_json(&json!({
        "out": out,
        "sentences": corpus.len(),
        "tokens": corpus.token_count(),
        "hash": corpus.content_hash(),
    }))
}

pub fn index(store: &Path, out: &Path, exec: Execution) -> Result<()> {
    let corpus = Corpus::new(load_sentences(store, ParseOptions::default())?)?;
    let idx = CorpusIndex::build_with(corpus, exec);
    idx.save(out)?;
    print_json(idx.metadata())
}

pub fn query_parse(text: &str) -> Result<()> {
    let elements = querylang::parse_elements(text)?;
    let captures: Vec<&str> = elements.iter().filter_map(|e| e.capture_name.as_deref()).collect();
    let relational = captures.contains(&"e1") && captures.contains(&"e2");
    let anchors: Vec<&str> = elements
        .iter()
        .filter(|e| e.role == Role::Anchor)
        .map(|e| e.surface.as_str())
        .collect();
    print_json(&json!({
        "elements": elements,
        "canonical": elements.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
        "stripped": elements.iter().map(|e| e.surface.as_str()).collect::<Vec<_>>().join(" "),
        "captures": captures,
        "anchors": anchors,
        "relational": relational,
    }))
}

pub fn query_compile(queries: &Path, parses: &Path, triggers: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let queries = querylang::parse_query_file(&read_text(queries)?)?;
    let parses: BTreeMap<String, Sentence> = load_sentences(parses, ParseOptions::default())?
        .into_iter()
        .map(|s| (s.id.clone(), s))
        .collect();
    let triggers = triggers
        .map(|p| read_text(p).and_then(|t| Ok(querylang::parse_trigger_map(&t)?)))
        .transpose()?;
    let mut compiled = Vec::with_capacity(queries.len());
    for q in queries {
        let q = match &triggers {
            Some(map) => q.expand_triggers(map).query,
            None => q,
        };
        let parse = parses
            .get(&q.id)
            .ok_or_else(|| AppError::not_found(format!("no parse with sent_id {}", q.id)))?;
        let pattern = patterns::compile(&q, parse).map_err(|e| {
            let mut err = AppError::from(e);
            err.detail = Some(json!({ "query": q.id }));
            err
        })?;
        compiled.push(pattern);
    }
    match out {
        Some(path) => {
            patterns::save_patterns(&compiled, path)?;
            print_json(&json!({ "out": path, "patterns": compiled.len() }))
        }
        None => print_json(&compiled),
    }
}

pub fn search(idx: &Path, pattern: &Path, id: Option<&str>, limit: usize, offset: usize, exec: Execution) -> Result<()> {
    let idx = CorpusIndex::load_with(idx, exec)?;
    let p = select_pattern(load_patterns(pattern)?, id)?;
    print_json(&engine::search_with(&p, &idx, limit, offset, exec))
}

pub fn sample(idx: &Path, pattern: &Path, id: Option<&str>, n: usize, seed: u64) -> Result<()> {
    let idx = CorpusIndex::load(idx)?;
    let p = select_pattern(load_patterns(pattern)?, id)?;
    print_json(&engine::sample_matches(&p, &idx, n, seed))
}

/// `dataset build` configuration. Paths are relative to the config file.
#[derive(Debug, Deserialize)]
pub struct BuildFile {
    pub index: PathBuf,
    pub patterns: PathBuf,
    pub out: PathBuf,
    #[serde(default)]
    pub verdicts: BTreeMap<String, Verdict>,
    /// Five yes/no judgements per pattern; turned into verdicts.
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<bool>>,
    #[serde(flatten)]
    pub config: BootstrapConfig,
}

pub fn dataset_build(config_path: &Path, include_pending: bool, exec: Execution) -> Result<()> {
    let mut file: BuildFile = serde_json::from_str(&read_text(config_path)?)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    file.config.include_pending |= include_pending;

    let mut verdicts = BTreeMap::new();
    for (id, labels) in &file.labels {
        verdicts.insert(id.clone(), bootstrap::quality_filter(labels)?);
    }
    verdicts.extend(file.verdicts.clone());

    let idx = CorpusIndex::load_with(resolve(&file.index), exec)?;
    let patterns = load_patterns(&resolve(&file.patterns))?;
    let ds = bootstrap::build_dataset(&file.config, &idx, &patterns, &verdicts, exec)?;
    let out = resolve(&file.out);
    ds.save(&out)?;
    print_json(&json!({ "out": out, "stats": ds.stats }))
}

pub fn eval(patterns: &Path, gold: &Path, parses: Option<&Path>, as_json: bool, exec: Execution) -> Result<()> {
    let patterns = load_patterns(patterns)?;
    let parses = match parses {
        Some(p) => load_sentences(p, ParseOptions::default())?,
        None => Vec::new(),
    };
    let gold = extractor::load_gold(&read_text(gold)?, &parses)?;
    let report = extractor::evaluate(&patterns, &gold, exec)?;
    if as_json {
        print_json(&report)
    } else {
        print!("{}", report.table());
        Ok(())
    }
}

pub fn generate(preset: &str, sentences: Option<usize>, seed: u64, out: &Path, facts: Option<&Path>) -> Result<()> {
    let spec = match preset {
        "desk" => SynthSpec::desk(seed),
        "eval" => SynthSpec::extraction_eval(seed),
        "scaled" => SynthSpec::scaled(sentences.unwrap_or(10_000), seed),
        other => return Err(AppError::bad_request("usage", format!("unknown preset {other}"))),
    };
    let c = synth::generate(&spec);
    fs::write(out, corpus::to_conllu_string(&c.sentences)).map_err(|e| AppError::io(out, e))?;
    if let Some(path) = facts {
        let mut text = String::new();
        for f in &c.facts {
            text.push_str(&serde_json::to_string(f)?);
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| AppError::io(path, e))?;
    }
    print_json(&json!({ "out": out, "sentences": c.sentences.len(), "facts": c.facts.len() }))
}

pub fn value_or_exit(result: Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) => {
            let body: Value = e.body();
            eprintln!("{body}");
            1
        }
    }
}
