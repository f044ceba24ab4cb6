//! A project directory and the state the service keeps in it.
//!
//! ```text
//! <project>/
//!   store/corpus.jsonl    ingested sentences
//!   index/                CorpusIndex::save output
//!   queries.json          registered queries, patterns and labels
//!   datasets/<id>/        dataset.jsonl, markers.tsv, stats.json, record.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use depsearch::bootstrap::{self, BootstrapConfig, DatasetStats, Verdict};
use depsearch::corpus::{self, ParseOptions};
use depsearch::engine::{self, CorpusIndex, Match};
use depsearch::par::Execution;
use depsearch::patterns::{self, Pattern};
use depsearch::querylang::{self, QueryExample};
use depsearch::{Corpus, Sentence};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::AppError;

pub type Result<T> = std::result::Result<T, AppError>;

pub const DATASET_FILES: [&str; 3] = ["dataset.jsonl", "markers.tsv", "stats.json"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompileStatus {
    Ok,
    Error,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quality {
    pub seed: Option<u64>,
    pub sampled: Vec<Match>,
    pub labels: Vec<bool>,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub query: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triggers: Option<BTreeMap<String, Vec<String>>>,
    pub status: CompileStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Pattern>,
    #[serde(default)]
    pub quality: Quality,
}

impl QueryRecord {
    pub fn verdict(&self) -> Verdict {
        self.quality.verdict.unwrap_or(Verdict::Pending)
    }

    fn same_request(&self, other: &QueryRecord) -> bool {
        self.query == other.query && self.parse == other.parse && self.triggers == other.triggers
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildState {
    Done,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub config: BootstrapConfig,
    pub state: BuildState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<DatasetStats>,
}

impl DatasetRecord {
    pub fn view(&self) -> Value {
        let downloads: BTreeMap<&str, String> = DATASET_FILES
            .iter()
            .map(|f| (*f, format!("/datasets/{}/download/{f}", self.id)))
            .collect();
        json!({
            "id": self.id,
            "state": self.state,
            "config": self.config,
            "stats": self.stats,
            "achieved_ratio": self.stats.as_ref().map(|s| s.achieved_ratio),
            "downloads": downloads,
        })
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProjectState {
    pub queries: BTreeMap<String, QueryRecord>,
    #[serde(skip)]
    pub datasets: BTreeMap<String, DatasetRecord>,
}

pub struct Project {
    pub root: PathBuf,
    pub index: CorpusIndex,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

impl Project {
    pub fn queries_path(root: &Path) -> PathBuf {
        root.join("queries.json")
    }

    pub fn dataset_dir(&self, id: &str) -> PathBuf {
        self.root.join("datasets").join(id)
    }

    /// Creates the layout and indexes `sentences`.
    pub fn init(root: &Path, sentences: Vec<Sentence>) -> Result<Value> {
        let corpus = Corpus::new(sentences)?;
        for dir in ["store", "datasets"] {
            fs::create_dir_all(root.join(dir)).map_err(|e| AppError::io(root, e))?;
        }
        corpus::save_corpus(corpus.sentences(), root.join("store/corpus.jsonl"))?;
        let idx = CorpusIndex::build(corpus);
        idx.save(root.join("index"))?;
        let queries = Self::queries_path(root);
        if !queries.exists() {
            write_atomic(&queries, b"{\n  \"queries\": {}\n}\n")?;
        }
        Ok(json!({ "project": root, "index": idx.metadata() }))
    }

    pub fn open(root: &Path) -> Result<(Project, ProjectState)> {
        let index = CorpusIndex::load(root.join("index"))?;
        let queries = Self::queries_path(root);
        let mut state: ProjectState = if queries.exists() {
            let text = fs::read_to_string(&queries).map_err(|e| AppError::io(&queries, e))?;
            serde_json::from_str(&text)?
        } else {
            ProjectState::default()
        };
        let datasets = root.join("datasets");
        if datasets.is_dir() {
            for entry in fs::read_dir(&datasets).map_err(|e| AppError::io(&datasets, e))? {
                let record = entry.map_err(|e| AppError::io(&datasets, e))?.path().join("record.json");
                if record.exists() {
                    let text = fs::read_to_string(&record).map_err(|e| AppError::io(&record, e))?;
                    let r: DatasetRecord = serde_json::from_str(&text)?;
                    state.datasets.insert(r.id.clone(), r);
                }
            }
        }
        Ok((Project { root: root.to_path_buf(), index }, state))
    }

    pub fn save_queries(&self, state: &ProjectState) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(state)?;
        bytes.push(b'\n');
        write_atomic(&Self::queries_path(&self.root), &bytes)
    }

    /// The parse for a query: the supplied CoNLL-U, or the first corpus
    /// sentence whose tokens equal the stripped example.
    fn find_parse(&self, q: &QueryExample, supplied: Option<&str>) -> Result<Sentence> {
        if let Some(text) = supplied {
            let mut parsed = corpus::parse_conllu_str(text, ParseOptions::default())?;
            if parsed.len() != 1 {
                return Err(AppError::bad_request(
                    "parse",
                    format!("expected one sentence in parse, found {}", parsed.len()),
                ));
            }
            return Ok(parsed.remove(0));
        }
        let words: Vec<&str> = q.elements.iter().map(|e| e.surface.as_str()).collect();
        self.index
            .corpus()
            .sentences()
            .iter()
            .find(|s| s.tokens.len() == words.len() && s.tokens.iter().zip(&words).all(|(t, w)| t.word == *w))
            .cloned()
            .ok_or_else(|| {
                AppError::bad_request("no_parse", "sentence not in the corpus; supply a CoNLL-U `parse`")
            })
    }

    /// Parses and compiles a query. Failures come back as an error record
    /// plus the error to report.
    pub fn compile_record(
        &self,
        id: &str,
        query: &str,
        parse: Option<String>,
        triggers: Option<BTreeMap<String, Vec<String>>>,
    ) -> (QueryRecord, Option<AppError>) {
        let mut record = QueryRecord {
            id: id.to_string(),
            query: query.to_string(),
            parse,
            triggers,
            status: CompileStatus::Ok,
            error: None,
            pattern: None,
            quality: Quality::default(),
        };
        let compiled = querylang::parse_query_with_id(id, query)
            .map_err(AppError::from)
            .map(|q| match &record.triggers {
                Some(map) => q.expand_triggers(map).query,
                None => q,
            })
            .and_then(|q| {
                let parse = self.find_parse(&q, record.parse.as_deref())?;
                Ok(patterns::compile(&q, &parse)?)
            });
        match compiled {
            Ok(p) => {
                record.pattern = Some(p);
                (record, None)
            }
            Err(e) => {
                record.status = CompileStatus::Error;
                record.error = Some(e.body()["error"].clone());
                (record, Some(e))
            }
        }
    }

    /// Registers `record`, keeping labels when the request is unchanged.
    pub fn register(&self, state: &mut ProjectState, record: QueryRecord) -> QueryRecord {
        match state.queries.get(&record.id) {
            Some(existing) if existing.same_request(&record) => existing.clone(),
            _ => {
                state.queries.insert(record.id.clone(), record.clone());
                record
            }
        }
    }

    pub fn pattern<'s>(&self, state: &'s ProjectState, id: &str) -> Result<&'s Pattern> {
        let record = state
            .queries
            .get(id)
            .ok_or_else(|| AppError::not_found(format!("no query {id}")))?;
        record
            .pattern
            .as_ref()
            .ok_or_else(|| AppError::conflict("not_compiled", format!("query {id} did not compile")))
    }

    /// Builds and persists dataset `id`. With no query ids the kept queries
    /// are used. Re-posting an identical config returns the stored record; a
    /// different config under an existing id is a conflict.
    pub fn build_dataset(&self, state: &ProjectState, id: &str, mut config: BootstrapConfig) -> Result<DatasetRecord> {
        if config.query_ids.is_empty() {
            config.query_ids = state
                .queries
                .values()
                .filter(|r| r.status == CompileStatus::Ok)
                .filter(|r| match r.verdict() {
                    Verdict::Kept => true,
                    Verdict::Pending => config.include_pending,
                    Verdict::Excluded => false,
                })
                .map(|r| r.id.clone())
                .collect();
        }
        if let Some(existing) = state.datasets.get(id) {
            if existing.config == config {
                return Ok(existing.clone());
            }
            return Err(AppError::conflict("dataset_exists", format!("dataset {id} exists with another config")));
        }
        let mut patterns = Vec::new();
        let mut verdicts = BTreeMap::new();
        for qid in &config.query_ids {
            patterns.push(self.pattern(state, qid)?.clone());
            verdicts.insert(qid.clone(), state.queries[qid].verdict());
        }
        let ds = bootstrap::build_dataset(&config, &self.index, &patterns, &verdicts, Execution::default())?;
        let dir = self.dataset_dir(id);
        ds.save(&dir)?;
        let record = DatasetRecord { id: id.to_string(), config, state: BuildState::Done, stats: Some(ds.stats) };
        write_atomic(&dir.join("record.json"), &serde_json::to_vec_pretty(&record)?)?;
        Ok(record)
    }

    pub fn corpus_stats(&self) -> Value {
        json!({
            "index": self.index.metadata(),
            "root": self.root,
        })
    }

    pub fn sample(&self, pattern: &Pattern, n: usize, seed: u64) -> Vec<Match> {
        engine::sample_matches(pattern, &self.index, n, seed)
    }
}
