use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{self, Corpus, CorpusError, Sentence, Span};
use crate::par::Execution;

pub const INDEX_FORMAT: &str = "depsearch-index";
pub const INDEX_VERSION: u32 = 1;

const MANIFEST_FILE: &str = "manifest.json";
const CORPUS_FILE: &str = "corpus.jsonl";
const POSTINGS_FILE: &str = "postings.bin";
const SHARD_SIZE: usize = 2048;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("index manifest: {0}")]
    Manifest(String),
    #[error("corpus hash mismatch: manifest has {expected}, corpus hashes to {found}")]
    HashMismatch { expected: String, found: String },
    #[error("postings file: {0}")]
    Postings(#[from] bincode::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKind {
    Word,
    Lemma,
    Pos,
    EntityType,
    DepLabel,
}

impl AttrKind {
    pub const ALL: [AttrKind; 5] = [
        AttrKind::Word,
        AttrKind::Lemma,
        AttrKind::Pos,
        AttrKind::EntityType,
        AttrKind::DepLabel,
    ];
}

/// Occurrences of one attribute value: ascending sentence ordinals, each with
/// its ascending token positions stored contiguously.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostingList {
    sentences: Vec<u32>,
    offsets: Vec<u32>,
    positions: Vec<u32>,
}

impl PostingList {
    fn push(&mut self, sentence: u32, position: u32) {
        if self.sentences.last() != Some(&sentence) {
            self.sentences.push(sentence);
            self.offsets.push(self.positions.len() as u32);
        }
        self.positions.push(position);
    }

    fn append(&mut self, other: PostingList) {
        let base = self.positions.len() as u32;
        self.sentences.extend(other.sentences);
        self.offsets.extend(other.offsets.into_iter().map(|o| o + base));
        self.positions.extend(other.positions);
    }

    pub fn sentences(&self) -> &[u32] {
        &self.sentences
    }

    /// Number of token occurrences.
    pub fn occurrences(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self, entry: usize) -> &[u32] {
        let start = self.offsets[entry] as usize;
        let end = self.offsets.get(entry + 1).map_or(self.positions.len(), |&o| o as usize);
        &self.positions[start..end]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u32])> + '_ {
        self.sentences.iter().enumerate().map(|(i, &s)| (s, self.positions(i)))
    }
}

/// Per-sentence data the matcher needs, derived once at index time.
#[derive(Clone, Debug)]
pub struct PreparedSentence {
    pub words: Vec<String>,
    pub lemmas: Vec<String>,
    pub children: Vec<Vec<usize>>,
    /// Entity type and span of the mention each token heads, if any.
    pub heads_mention: Vec<Option<(String, Span)>>,
    /// `[min, max]` token positions of each token's subtree.
    pub subtree: Vec<Span>,
}

impl PreparedSentence {
    pub fn new(sentence: &Sentence) -> Self {
        let n = sentence.tokens.len();
        let words = sentence.tokens.iter().map(|t| t.word.to_lowercase()).collect();
        let lemmas = sentence.tokens.iter().map(|t| t.lemma.to_lowercase()).collect();
        let children = sentence.children();
        let mut heads_mention = vec![None; n];
        for m in sentence.mentions() {
            heads_mention[m.head_token] = Some((m.entity_type, m.span));
        }
        let mut subtree: Vec<Span> = (0..n).map(Span::single).collect();
        // children before parents
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<usize> = sentence.root().into_iter().collect();
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(&children[v]);
        }
        for &v in order.iter().rev() {
            if let Some(h) = sentence.tokens[v].head {
                let (child, parent) = (subtree[v], subtree[h]);
                subtree[h] = Span::new(parent.start.min(child.start), parent.end.max(child.end));
            }
        }
        PreparedSentence { words, lemmas, children, heads_mention, subtree }
    }

    pub fn mention_type(&self, token: usize) -> Option<&str> {
        self.heads_mention[token].as_ref().map(|(t, _)| t.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMetadata {
    pub format: String,
    pub version: u32,
    pub corpus_hash: String,
    pub sentences: usize,
    pub tokens: usize,
    pub mentions: usize,
    pub distinct_values: HashMap<AttrKind, usize>,
}

/// Inverted index over word, lemma, POS, entity type (mention heads only)
/// and dependency label, plus the sentence store. Immutable once built.
#[derive(Clone, Debug)]
pub struct CorpusIndex {
    corpus: Arc<Corpus>,
    prepared: Vec<PreparedSentence>,
    postings: HashMap<(AttrKind, String), PostingList>,
    metadata: IndexMetadata,
}

type Shard = HashMap<(AttrKind, String), PostingList>;

fn index_shard(start: usize, sentences: &[Sentence]) -> Shard {
    let mut shard: Shard = HashMap::new();
    let mut add = |kind: AttrKind, value: &str, s: u32, p: u32| {
        match shard.get_mut(&(kind, value.to_string())) {
            Some(list) => list.push(s, p),
            None => {
                let mut list = PostingList::default();
                list.push(s, p);
                shard.insert((kind, value.to_string()), list);
            }
        }
    };
    for (offset, sentence) in sentences.iter().enumerate() {
        let s = (start + offset) as u32;
        let mut heads: Vec<Option<String>> = vec![None; sentence.tokens.len()];
        for m in sentence.mentions() {
            heads[m.head_token] = Some(m.entity_type);
        }
        for token in &sentence.tokens {
            let p = token.index as u32;
            add(AttrKind::Word, &token.word.to_lowercase(), s, p);
            add(AttrKind::Lemma, &token.lemma.to_lowercase(), s, p);
            add(AttrKind::Pos, &token.pos, s, p);
            add(AttrKind::DepLabel, &token.dep_label, s, p);
            if let Some(ty) = &heads[token.index] {
                add(AttrKind::EntityType, ty, s, p);
            }
        }
    }
    shard
}

impl CorpusIndex {
    pub fn build(corpus: Corpus) -> Self {
        Self::build_with(corpus, Execution::default())
    }

    /// Shards are indexed independently and merged in shard order, so the
    /// result is identical under either execution mode.
    pub fn build_with(corpus: Corpus, exec: Execution) -> Self {
        let sentences = corpus.sentences();
        let shards = exec.map_chunks(sentences, SHARD_SIZE, index_shard);
        let mut postings: HashMap<(AttrKind, String), PostingList> = HashMap::new();
        for shard in shards {
            for (key, list) in shard {
                match postings.get_mut(&key) {
                    Some(existing) => existing.append(list),
                    None => {
                        postings.insert(key, list);
                    }
                }
            }
        }
        let prepared = exec.map(sentences, PreparedSentence::new);
        let hash = corpus.content_hash();
        Self::assemble(Arc::new(corpus), prepared, postings, hash)
    }

    fn assemble(
        corpus: Arc<Corpus>,
        prepared: Vec<PreparedSentence>,
        postings: HashMap<(AttrKind, String), PostingList>,
        corpus_hash: String,
    ) -> Self {
        let mut distinct_values: HashMap<AttrKind, usize> = AttrKind::ALL.iter().map(|&k| (k, 0)).collect();
        let mut mentions = 0;
        for ((kind, _), list) in &postings {
            *distinct_values.entry(*kind).or_default() += 1;
            if *kind == AttrKind::EntityType {
                mentions += list.occurrences();
            }
        }
        let metadata = IndexMetadata {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            corpus_hash,
            sentences: corpus.len(),
            tokens: corpus.token_count(),
            mentions,
            distinct_values,
        };
        CorpusIndex { corpus, prepared, postings, metadata }
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn metadata(&self) -> &IndexMetadata {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    pub fn sentence(&self, ordinal: usize) -> &Sentence {
        &self.corpus.sentences()[ordinal]
    }

    pub fn prepared(&self, ordinal: usize) -> &PreparedSentence {
        &self.prepared[ordinal]
    }

    /// Word and lemma values must be lowercased by the caller.
    pub fn postings(&self, kind: AttrKind, value: &str) -> Option<&PostingList> {
        self.postings.get(&(kind, value.to_string()))
    }

    pub fn posting_keys(&self) -> impl Iterator<Item = &(AttrKind, String)> {
        self.postings.keys()
    }

    /// Writes `manifest.json`, `corpus.jsonl` and `postings.bin` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), IndexError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        corpus::save_corpus(self.corpus.sentences(), dir.join(CORPUS_FILE))?;
        let mut sorted: Vec<(&(AttrKind, String), &PostingList)> = self.postings.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let out = BufWriter::new(File::create(dir.join(POSTINGS_FILE))?);
        bincode::serialize_into(out, &sorted)?;
        let manifest = serde_json::to_string_pretty(&self.manifest_json())
            .map_err(|e| IndexError::Manifest(e.to_string()))?;
        std::fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
        Ok(())
    }

    fn manifest_json(&self) -> serde_json::Value {
        let mut counts: Vec<(AttrKind, usize)> = self.metadata.distinct_values.iter().map(|(k, v)| (*k, *v)).collect();
        counts.sort();
        let counts: serde_json::Map<String, serde_json::Value> = counts
            .into_iter()
            .map(|(k, v)| (serde_json::to_value(k).unwrap().as_str().unwrap().to_string(), v.into()))
            .collect();
        serde_json::json!({
            "format": self.metadata.format,
            "version": self.metadata.version,
            "corpus_hash": self.metadata.corpus_hash,
            "sentences": self.metadata.sentences,
            "tokens": self.metadata.tokens,
            "mentions": self.metadata.mentions,
            "distinct_values": counts,
        })
    }

    /// Loads an index directory, verifying the corpus against the manifest hash.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::load_with(dir, Execution::default())
    }

    pub fn load_with(dir: impl AsRef<Path>, exec: Execution) -> Result<Self, IndexError> {
        let dir = dir.as_ref();
        let manifest: IndexMetadata = serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE))?)
            .map_err(|e| IndexError::Manifest(e.to_string()))?;
        if manifest.format != INDEX_FORMAT || manifest.version != INDEX_VERSION {
            return Err(IndexError::Manifest(format!(
                "expected {INDEX_FORMAT} v{INDEX_VERSION}, found {} v{}",
                manifest.format, manifest.version
            )));
        }
        let corpus = Corpus::new(corpus::load_corpus(dir.join(CORPUS_FILE))?)?;
        let found = corpus.content_hash();
        if found != manifest.corpus_hash {
            return Err(IndexError::HashMismatch { expected: manifest.corpus_hash, found });
        }
        let reader = BufReader::new(File::open(dir.join(POSTINGS_FILE))?);
        let sorted: Vec<((AttrKind, String), PostingList)> = bincode::deserialize_from(reader)?;
        let postings: HashMap<_, _> = sorted.into_iter().collect();
        let prepared = exec.map(corpus.sentences(), PreparedSentence::new);
        Ok(Self::assemble(Arc::new(corpus), prepared, postings, found))
    }
}
