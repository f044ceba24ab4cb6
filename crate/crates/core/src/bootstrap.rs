//! Training-data assembly from pattern matches.
//!
//! Kept patterns contribute positives. Negatives are typed mention pairs
//! that no kept pattern connects, sampled to a fixed ratio.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Span;
use crate::engine::{self, AttrKind, CorpusIndex, PostingList};
use crate::par::Execution;
use crate::patterns::{Pattern, PatternError, Signature};
use crate::sampling;

/// Matches shown to the annotator per pattern.
pub const QUALITY_SAMPLE_SIZE: usize = 5;
/// A pattern with more "no" answers than this is excluded.
pub const MAX_REJECTIONS: usize = 1;

pub const NEGATIVE_SOURCE: &str = "negative-sample";

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("{0} labels given, at most {QUALITY_SAMPLE_SIZE} allowed")]
    TooManyLabels(usize),
    #[error("unknown pattern {0}")]
    UnknownPattern(String),
    #[error("patterns awaiting quality labels: {}", .0.join(", "))]
    Pending(Vec<String>),
    #[error("no kept patterns for relation {0}")]
    NoKeptPatterns(String),
    #[error("kept patterns produced no positives")]
    EmptyPositiveSet,
    #[error("cannot infer the {0} entity types; some pattern leaves them open")]
    OpenSignature(&'static str),
    #[error("max_positives must be at least 1")]
    ZeroCap,
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, BootstrapError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Kept,
    Excluded,
    Pending,
}

/// Verdict from yes/no judgements of sampled matches: pending until all
/// [`QUALITY_SAMPLE_SIZE`] are in, then excluded on two or more "no".
pub fn quality_filter(labels: &[bool]) -> Result<Verdict> {
    if labels.len() > QUALITY_SAMPLE_SIZE {
        return Err(BootstrapError::TooManyLabels(labels.len()));
    }
    if labels.len() < QUALITY_SAMPLE_SIZE {
        return Ok(Verdict::Pending);
    }
    let rejected = labels.iter().filter(|&&ok| !ok).count();
    Ok(if rejected > MAX_REJECTIONS { Verdict::Excluded } else { Verdict::Kept })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityRecord {
    pub pattern_id: String,
    pub sampled: Vec<engine::Match>,
    pub labels: Vec<bool>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetExample {
    pub id: String,
    pub relation: String,
    pub label: Label,
    pub tokens: Vec<String>,
    pub e1: Span,
    pub e2: Span,
    /// Contributing pattern id, or [`NEGATIVE_SOURCE`].
    pub source: String,
    pub sentence_id: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub relation: String,
    /// Patterns to use; empty means every pattern handed to the builder.
    #[serde(default)]
    pub query_ids: Vec<String>,
    #[serde(default = "default_max_positives")]
    pub max_positives: usize,
    #[serde(default = "default_neg_ratio")]
    pub neg_ratio: usize,
    #[serde(default)]
    pub seed: u64,
    /// Overrides the signature inferred from the kept patterns.
    #[serde(default)]
    pub signature: Option<Signature>,
    /// Treat patterns without a verdict as kept.
    #[serde(default)]
    pub include_pending: bool,
}

fn default_max_positives() -> usize {
    10_000
}

fn default_neg_ratio() -> usize {
    10
}

impl BootstrapConfig {
    pub fn new(relation: impl Into<String>) -> Self {
        BootstrapConfig {
            relation: relation.into(),
            query_ids: Vec::new(),
            max_positives: default_max_positives(),
            neg_ratio: default_neg_ratio(),
            seed: 0,
            signature: None,
            include_pending: false,
        }
    }
}

/// Union of the kept patterns' argument types. Fails when a pattern leaves
/// a side unconstrained, since negatives could then be any mention.
pub fn relation_signature(patterns: &[&Pattern]) -> Result<Signature> {
    let mut sig = Signature::default();
    for p in patterns {
        if p.signature.e1.is_empty() {
            return Err(BootstrapError::OpenSignature("e1"));
        }
        if p.signature.e2.is_empty() {
            return Err(BootstrapError::OpenSignature("e2"));
        }
        sig.e1.extend(p.signature.e1.iter().cloned());
        sig.e2.extend(p.signature.e2.iter().cloned());
    }
    if sig.e1.is_empty() {
        return Err(BootstrapError::OpenSignature("e1"));
    }
    Ok(sig)
}

/// A positive before id assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Positive {
    pub ordinal: usize,
    pub e1: Span,
    pub e2: Span,
    pub pattern_id: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternStats {
    pub matches: usize,
    pub contributed: usize,
    /// Matches whose pair another pattern (earlier by id) already claimed.
    pub duplicates: usize,
}

#[derive(Clone, Debug)]
pub struct Positives {
    pub positives: Vec<Positive>,
    /// Distinct pairs before the cap.
    pub distinct: usize,
    pub per_pattern: BTreeMap<String, PatternStats>,
}

/// Distinct `(sentence, e1, e2)` triples matched by any pattern, the first
/// pattern in id order claiming each triple, downsampled to `max_positives`.
pub fn collect_positives(
    patterns: &[&Pattern],
    index: &CorpusIndex,
    max_positives: usize,
    seed: u64,
    exec: Execution,
) -> Result<Positives> {
    if max_positives == 0 {
        return Err(BootstrapError::ZeroCap);
    }
    let mut ordered: Vec<&Pattern> = patterns.to_vec();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let mut claimed: BTreeMap<(usize, Span, Span), &str> = BTreeMap::new();
    let mut per_pattern = BTreeMap::new();
    for p in ordered {
        p.require_relational()?;
        let mut stats = PatternStats::default();
        for (ordinal, matches) in engine::matches_by_sentence(p, index, exec) {
            for m in matches {
                let (Some(e1), Some(e2)) = (m.e1(), m.e2()) else { continue };
                stats.matches += 1;
                match claimed.entry((ordinal, e1, e2)) {
                    Entry::Occupied(_) => stats.duplicates += 1,
                    Entry::Vacant(slot) => {
                        slot.insert(&p.id);
                        stats.contributed += 1;
                    }
                }
            }
        }
        per_pattern.insert(p.id.clone(), stats);
    }
    if claimed.is_empty() {
        return Err(BootstrapError::EmptyPositiveSet);
    }
    let distinct = claimed.len();
    let all: Vec<Positive> = claimed
        .into_iter()
        .map(|((ordinal, e1, e2), id)| Positive { ordinal, e1, e2, pattern_id: id.to_string() })
        .collect();
    let positives = sampling::sample(all, max_positives, seed);
    Ok(Positives { positives, distinct, per_pattern })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub target: usize,
    pub available: usize,
}

#[derive(Clone, Debug)]
pub struct Negatives {
    /// `(ordinal, e1, e2)` in corpus order.
    pub pairs: Vec<(usize, Span, Span)>,
    pub candidates: usize,
    pub target: usize,
    pub shortfall: Option<Shortfall>,
}

fn type_ok(set: &BTreeSet<String>, ty: &str) -> bool {
    set.is_empty() || set.contains(ty)
}

fn sentences_with(index: &CorpusIndex, types: &BTreeSet<String>) -> Option<BTreeSet<u32>> {
    if types.is_empty() {
        return None;
    }
    Some(
        types
            .iter()
            .filter_map(|t| index.postings(AttrKind::EntityType, t))
            .flat_map(PostingList::sentences)
            .copied()
            .collect(),
    )
}

/// Every ordered pair of distinct mentions typed by `signature` that is not
/// a positive and that no kept pattern connects, i.e. no match of a kept
/// pattern binds e1 and e2 inside the two mentions. An empty side of the
/// signature admits any type.
pub fn negative_candidates(
    index: &CorpusIndex,
    signature: &Signature,
    kept: &[&Pattern],
    positives: &HashSet<(usize, Span, Span)>,
    exec: Execution,
) -> Vec<(usize, Span, Span)> {
    let sentences: Vec<usize> = match (sentences_with(index, &signature.e1), sentences_with(index, &signature.e2)) {
        (Some(a), Some(b)) => a.intersection(&b).map(|&o| o as usize).collect(),
        (Some(a), None) | (None, Some(a)) => a.into_iter().map(|o| o as usize).collect(),
        (None, None) => (0..index.len()).collect(),
    };
    exec.map(&sentences, |&ordinal| {
        let mentions = index.sentence(ordinal).mentions();
        let connected: Vec<(Span, Span)> = kept
            .iter()
            .flat_map(|p| engine::match_at(p, index, ordinal))
            .filter_map(|m| Some((m.e1()?, m.e2()?)))
            .collect();
        let mut out = Vec::new();
        for a in mentions.iter().filter(|m| type_ok(&signature.e1, &m.entity_type)) {
            for b in mentions.iter().filter(|m| type_ok(&signature.e2, &m.entity_type)) {
                if a.span == b.span || positives.contains(&(ordinal, a.span, b.span)) {
                    continue;
                }
                let linked = connected
                    .iter()
                    .any(|(x, y)| a.span.contains_span(x) && b.span.contains_span(y));
                if !linked {
                    out.push((ordinal, a.span, b.span));
                }
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Samples `neg_ratio * positives.len()` negatives uniformly from
/// [`negative_candidates`], reporting a shortfall when too few exist.
pub fn sample_negatives(
    index: &CorpusIndex,
    signature: &Signature,
    kept: &[&Pattern],
    positives: &[Positive],
    neg_ratio: usize,
    seed: u64,
    exec: Execution,
) -> Negatives {
    let target = neg_ratio.saturating_mul(positives.len());
    if target == 0 {
        return Negatives { pairs: Vec::new(), candidates: 0, target, shortfall: None };
    }
    let claimed: HashSet<(usize, Span, Span)> = positives.iter().map(|p| (p.ordinal, p.e1, p.e2)).collect();
    let all = negative_candidates(index, signature, kept, &claimed, exec);
    let candidates = all.len();
    let shortfall = (candidates < target).then_some(Shortfall { target, available: candidates });
    Negatives { pairs: sampling::sample(all, target, seed), candidates, target, shortfall }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub id: String,
    pub verdict: Verdict,
    #[serde(flatten)]
    pub stats: PatternStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub relation: String,
    pub seed: u64,
    pub signature: Signature,
    pub patterns: Vec<PatternReport>,
    /// Requested patterns skipped for an "excluded" verdict.
    pub skipped: Vec<String>,
    pub distinct_positives: usize,
    pub positives: usize,
    pub capped: bool,
    pub neg_ratio: usize,
    pub negative_candidates: usize,
    pub negatives: usize,
    pub target_negatives: usize,
    pub achieved_ratio: f64,
    pub shortfall: Option<Shortfall>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub examples: Vec<DatasetExample>,
    pub stats: DatasetStats,
}

/// Seed offset separating the negative stream from the positive one.
const NEGATIVE_STREAM: u64 = 0x6e65_6761_7469_7665;

/// Builds the dataset for `config` from `patterns` and their verdicts.
/// Requested patterns without a verdict count as pending.
pub fn build_dataset(
    config: &BootstrapConfig,
    index: &CorpusIndex,
    patterns: &[Pattern],
    verdicts: &BTreeMap<String, Verdict>,
    exec: Execution,
) -> Result<Dataset> {
    let by_id: BTreeMap<&str, &Pattern> = patterns.iter().map(|p| (p.id.as_str(), p)).collect();
    let requested: Vec<&Pattern> = if config.query_ids.is_empty() {
        by_id.values().copied().collect()
    } else {
        let ids: BTreeSet<&str> = config.query_ids.iter().map(String::as_str).collect();
        ids.into_iter()
            .map(|id| by_id.get(id).copied().ok_or_else(|| BootstrapError::UnknownPattern(id.to_string())))
            .collect::<Result<_>>()?
    };

    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    let mut pending = Vec::new();
    for p in requested {
        p.require_relational()?;
        match verdicts.get(&p.id).copied().unwrap_or(Verdict::Pending) {
            Verdict::Kept => kept.push(p),
            Verdict::Excluded => skipped.push(p.id.clone()),
            Verdict::Pending if config.include_pending => kept.push(p),
            Verdict::Pending => pending.push(p.id.clone()),
        }
    }
    if !pending.is_empty() {
        return Err(BootstrapError::Pending(pending));
    }
    if kept.is_empty() {
        return Err(BootstrapError::NoKeptPatterns(config.relation.clone()));
    }
    let signature = match &config.signature {
        Some(s) => s.clone(),
        None => relation_signature(&kept)?,
    };

    let pos = collect_positives(&kept, index, config.max_positives, config.seed, exec)?;
    let neg = sample_negatives(
        index,
        &signature,
        &kept,
        &pos.positives,
        config.neg_ratio,
        config.seed ^ NEGATIVE_STREAM,
        exec,
    );

    let example = |n: usize, label: Label, (ordinal, e1, e2): (usize, Span, Span), source: &str| {
        let s = index.sentence(ordinal);
        DatasetExample {
            id: format!("{}-{}-{:06}", config.relation, &label.as_str()[..3], n),
            relation: config.relation.clone(),
            label,
            tokens: s.tokens.iter().map(|t| t.word.clone()).collect(),
            e1,
            e2,
            source: source.to_string(),
            sentence_id: s.id.clone(),
        }
    };
    let mut examples = Vec::with_capacity(pos.positives.len() + neg.pairs.len());
    for (n, p) in pos.positives.iter().enumerate() {
        examples.push(example(n + 1, Label::Positive, (p.ordinal, p.e1, p.e2), &p.pattern_id));
    }
    for (n, &pair) in neg.pairs.iter().enumerate() {
        examples.push(example(n + 1, Label::Negative, pair, NEGATIVE_SOURCE));
    }

    let patterns = kept
        .iter()
        .map(|p| PatternReport {
            id: p.id.clone(),
            verdict: verdicts.get(&p.id).copied().unwrap_or(Verdict::Pending),
            stats: pos.per_pattern.get(&p.id).cloned().unwrap_or_default(),
        })
        .collect();
    let stats = DatasetStats {
        relation: config.relation.clone(),
        seed: config.seed,
        signature,
        patterns,
        skipped,
        distinct_positives: pos.distinct,
        positives: pos.positives.len(),
        capped: pos.distinct > pos.positives.len(),
        neg_ratio: config.neg_ratio,
        negative_candidates: neg.candidates,
        negatives: neg.pairs.len(),
        target_negatives: neg.target,
        achieved_ratio: neg.pairs.len() as f64 / pos.positives.len() as f64,
        shortfall: neg.shortfall,
    };
    Ok(Dataset { examples, stats })
}

pub const E1_START: &str = "[E1start]";
pub const E1_END: &str = "[E1end]";
pub const E2_START: &str = "[E2start]";
pub const E2_END: &str = "[E2end]";

/// Tokens joined by spaces with marker tokens around both arguments.
pub fn render_entity_markers(tokens: &[String], e1: Span, e2: Span) -> String {
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len() + 4);
    for (i, tok) in tokens.iter().enumerate() {
        if i == e1.start {
            out.push(E1_START);
        }
        if i == e2.start {
            out.push(E2_START);
        }
        out.push(tok);
        if i == e1.end {
            out.push(E1_END);
        }
        if i == e2.end {
            out.push(E2_END);
        }
    }
    out.join(" ")
}

/// Recovers the tokens and argument spans from a marked sentence.
pub fn parse_entity_markers(line: &str) -> Option<(Vec<String>, Span, Span)> {
    let mut tokens = Vec::new();
    let (mut s1, mut e1, mut s2, mut e2) = (None, None, None, None);
    for piece in line.split(' ') {
        match piece {
            E1_START => s1 = Some(tokens.len()),
            E2_START => s2 = Some(tokens.len()),
            E1_END => e1 = Some(tokens.len().checked_sub(1)?),
            E2_END => e2 = Some(tokens.len().checked_sub(1)?),
            _ => tokens.push(piece.to_string()),
        }
    }
    Some((tokens, Span::new(s1?, e1?), Span::new(s2?, e2?)))
}

pub fn write_jsonl<W: Write>(mut out: W, examples: &[DatasetExample]) -> std::io::Result<()> {
    for ex in examples {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// `marked sentence<TAB>label`, one example per line.
pub fn write_entity_markers<W: Write>(mut out: W, examples: &[DatasetExample]) -> std::io::Result<()> {
    for ex in examples {
        writeln!(out, "{}\t{}", render_entity_markers(&ex.tokens, ex.e1, ex.e2), ex.label.as_str())?;
    }
    Ok(())
}

pub fn read_jsonl(text: &str) -> Result<Vec<DatasetExample>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(BootstrapError::from))
        .collect()
}

impl Dataset {
    /// Writes `dataset.jsonl`, `markers.tsv` and `stats.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut jsonl = Vec::new();
        write_jsonl(&mut jsonl, &self.examples)?;
        fs::write(dir.join("dataset.jsonl"), jsonl)?;
        let mut markers = Vec::new();
        write_entity_markers(&mut markers, &self.examples)?;
        fs::write(dir.join("markers.tsv"), markers)?;
        fs::write(dir.join("stats.json"), serde_json::to_vec_pretty(&self.stats)?)?;
        Ok(())
    }

    pub fn positives(&self) -> impl Iterator<Item = &DatasetExample> {
        self.examples.iter().filter(|e| e.label == Label::Positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &DatasetExample> {
        self.examples.iter().filter(|e| e.label == Label::Negative)
    }
}
