//! Inverted index and tree-pattern matching.

mod index;
mod matcher;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Sentence, Span};
use crate::par::Execution;
use crate::patterns::{Pattern, E1, E2};
use crate::sampling;

pub use index::{AttrKind, CorpusIndex, IndexError, IndexMetadata, PostingList, PreparedSentence};

use matcher::Plan;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Match {
    pub sentence_id: String,
    pub pattern_id: String,
    pub bindings: BTreeMap<String, Span>,
}

impl Match {
    pub fn e1(&self) -> Option<Span> {
        self.bindings.get(E1).copied()
    }

    pub fn e2(&self) -> Option<Span> {
        self.bindings.get(E2).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPage {
    pub total: usize,
    pub matches: Vec<Match>,
}

/// All matches of `pattern` in one sentence.
///
/// A match maps pattern nodes injectively to tokens so that every node
/// constraint holds (entity constraints only on mention heads) and every
/// pattern edge lands on a dependency edge with the same label and
/// direction. Results are ordered by the root's token, then by bindings;
/// mappings with identical bindings are reported once.
pub fn match_pattern(pattern: &Pattern, sentence: &Sentence) -> Vec<Match> {
    let prep = PreparedSentence::new(sentence);
    matches_in(&Plan::new(pattern), pattern, sentence, &prep)
}

/// Matches of `pattern` in the indexed sentence at `ordinal`, reusing the
/// index's prepared data.
pub fn match_at(pattern: &Pattern, index: &CorpusIndex, ordinal: usize) -> Vec<Match> {
    match_prepared(pattern, index.sentence(ordinal), index.prepared(ordinal))
}

/// [`match_pattern`] with the sentence's prepared data supplied by the caller.
pub fn match_prepared(pattern: &Pattern, sentence: &Sentence, prep: &PreparedSentence) -> Vec<Match> {
    matches_in(&Plan::new(pattern), pattern, sentence, prep)
}

fn matches_in(plan: &Plan<'_>, pattern: &Pattern, sentence: &Sentence, prep: &PreparedSentence) -> Vec<Match> {
    let raw = matcher::assignments(plan, sentence, prep);
    if raw.is_empty() {
        return Vec::new();
    }
    matcher::resolve_hits(pattern, prep, raw)
        .into_iter()
        .map(|bindings| Match {
            sentence_id: sentence.id.clone(),
            pattern_id: pattern.id.clone(),
            bindings,
        })
        .collect()
}

fn union(lists: Vec<&[u32]>) -> Vec<u32> {
    match lists.len() {
        0 => Vec::new(),
        1 => lists[0].to_vec(),
        _ => {
            let mut all: Vec<u32> = lists.concat();
            all.sort_unstable();
            all.dedup();
            all
        }
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Sentence ordinals that may contain a match: the intersection over every
/// hard constraint (value sets unioned first) and every edge label,
/// smallest lists first. Never drops a sentence that matches.
pub fn candidate_ordinals(pattern: &Pattern, index: &CorpusIndex) -> Vec<usize> {
    let postings = |kind: AttrKind, values: &mut dyn Iterator<Item = &String>| -> Vec<u32> {
        union(
            values
                .filter_map(|v| index.postings(kind, v))
                .map(PostingList::sentences)
                .collect(),
        )
    };
    let mut lists: Vec<Vec<u32>> = Vec::new();
    for node in &pattern.nodes {
        let sets = [
            (AttrKind::Word, &node.word_set),
            (AttrKind::Lemma, &node.lemma_set),
            (AttrKind::Pos, &node.pos_set),
            (AttrKind::EntityType, &node.entity_set),
        ];
        for (kind, set) in sets {
            if let Some(values) = set {
                lists.push(postings(kind, &mut values.iter()));
            }
        }
    }
    for edge in &pattern.edges {
        lists.push(postings(AttrKind::DepLabel, &mut std::iter::once(&edge.dep_label)));
    }
    if lists.is_empty() {
        return (0..index.len()).collect();
    }
    lists.sort_by_key(Vec::len);
    let mut iter = lists.into_iter();
    let mut acc = iter.next().unwrap_or_default();
    for list in iter {
        if acc.is_empty() {
            break;
        }
        acc = intersect(&acc, &list);
    }
    acc.into_iter().map(|s| s as usize).collect()
}

/// Candidate sentence ids in ascending corpus order.
pub fn candidates(pattern: &Pattern, index: &CorpusIndex) -> Vec<String> {
    candidate_ordinals(pattern, index)
        .into_iter()
        .map(|o| index.sentence(o).id.clone())
        .collect()
}

/// Matches per candidate sentence, as `(ordinal, matches)` in corpus order.
pub fn matches_by_sentence(pattern: &Pattern, index: &CorpusIndex, exec: Execution) -> Vec<(usize, Vec<Match>)> {
    let plan = Plan::new(pattern);
    let cands = candidate_ordinals(pattern, index);
    exec.map(&cands, |&o| (o, matches_in(&plan, pattern, index.sentence(o), index.prepared(o))))
        .into_iter()
        .filter(|(_, m)| !m.is_empty())
        .collect()
}

/// Every match over the corpus in global order.
pub fn search_all(pattern: &Pattern, index: &CorpusIndex, exec: Execution) -> Vec<Match> {
    matches_by_sentence(pattern, index, exec)
        .into_iter()
        .flat_map(|(_, m)| m)
        .collect()
}

pub fn search(pattern: &Pattern, index: &CorpusIndex, limit: usize, offset: usize) -> SearchPage {
    search_with(pattern, index, limit, offset, Execution::default())
}

pub fn search_with(pattern: &Pattern, index: &CorpusIndex, limit: usize, offset: usize, exec: Execution) -> SearchPage {
    let all = search_all(pattern, index, exec);
    let total = all.len();
    let matches = all.into_iter().skip(offset).take(limit).collect();
    SearchPage { total, matches }
}

/// Uniform sample of `n` matches without replacement, in global order.
pub fn sample_matches(pattern: &Pattern, index: &CorpusIndex, n: usize, seed: u64) -> Vec<Match> {
    sampling::sample(search_all(pattern, index, Execution::default()), n, seed)
}

/// One JSON object per line.
pub fn write_matches_jsonl<W: Write>(mut out: W, matches: &[Match]) -> std::io::Result<()> {
    for m in matches {
        serde_json::to_writer(&mut out, m)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
