//! Brute-force reference implementations and random instance generators.
//! Nothing here calls into the engine's matcher or pruning code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use depsearch::corpus::{self, ParseOptions};
use depsearch::patterns::{Pattern, PatternEdge, PatternNode};
use depsearch::querylang::{self, QueryExample};
use depsearch::{Sentence, Span, Token};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Bindings = BTreeMap<String, Span>;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Fixture queries paired with their frozen parses.
pub fn fixture_pairs() -> Vec<(QueryExample, Sentence)> {
    let queries = querylang::parse_query_file(&fixture_text("example_queries.txt")).unwrap();
    let parses = corpus::parse_conllu_str(&fixture_text("example_queries.conllu"), ParseOptions::default()).unwrap();
    let by_id: BTreeMap<String, Sentence> = parses.into_iter().map(|s| (s.id.clone(), s)).collect();
    queries
        .into_iter()
        .map(|q| {
            let s = by_id.get(&q.id).unwrap_or_else(|| panic!("no parse for {}", q.id)).clone();
            (q, s)
        })
        .collect()
}

pub fn trigger_lists() -> BTreeMap<String, Vec<String>> {
    querylang::parse_trigger_map(&fixture_text("trigger_lists.json")).unwrap()
}

/// `(type, span, head)` for every mention, read straight off the BIO tags.
pub fn oracle_mentions(s: &Sentence) -> Vec<(String, Span, usize)> {
    let mut out = Vec::new();
    let mut open: Option<(String, usize)> = None;
    let close = |open: &mut Option<(String, usize)>, end: usize, out: &mut Vec<(String, Span, usize)>| {
        if let Some((ty, start)) = open.take() {
            let head = (start..=end)
                .find(|&i| s.tokens[i].head.is_none_or(|h| h < start || h > end))
                .unwrap();
            out.push((ty, Span::new(start, end), head));
        }
    };
    for (i, t) in s.tokens.iter().enumerate() {
        let tag = t.entity_tag.as_str();
        if let Some(ty) = tag.strip_prefix("I-") {
            if open.as_ref().is_some_and(|(o, _)| o == ty) {
                continue;
            }
        }
        close(&mut open, i.wrapping_sub(1), &mut out);
        if let Some(ty) = tag.strip_prefix("B-").or_else(|| tag.strip_prefix("I-")) {
            open = Some((ty.to_string(), i));
        }
    }
    close(&mut open, s.tokens.len().wrapping_sub(1), &mut out);
    out
}

fn subtree_span(s: &Sentence, v: usize) -> Span {
    let mut lo = v;
    let mut hi = v;
    for i in 0..s.tokens.len() {
        let mut cur = Some(i);
        while let Some(c) = cur {
            if c == v {
                lo = lo.min(i);
                hi = hi.max(i);
                break;
            }
            cur = s.tokens[c].head;
        }
    }
    Span::new(lo, hi)
}

fn node_ok(node: &PatternNode, t: &Token, heads: &BTreeMap<usize, (String, Span)>) -> bool {
    let has = |set: &Option<BTreeSet<String>>, v: &str| set.as_ref().is_none_or(|s| s.contains(v));
    has(&node.word_set, &t.word.to_lowercase())
        && has(&node.lemma_set, &t.lemma.to_lowercase())
        && has(&node.pos_set, &t.pos)
        && match &node.entity_set {
            None => true,
            Some(types) => heads.get(&t.index).is_some_and(|(ty, _)| types.contains(ty)),
        }
}

/// Every injective node-to-token map, filtered by constraints and edges,
/// reduced to its set of capture bindings.
pub fn oracle_matches(p: &Pattern, s: &Sentence) -> BTreeSet<Bindings> {
    let heads: BTreeMap<usize, (String, Span)> =
        oracle_mentions(s).into_iter().map(|(ty, span, h)| (h, (ty, span))).collect();
    let k = p.nodes.len();
    let n = s.tokens.len();
    let mut out = BTreeSet::new();
    let mut assign = vec![0usize; k];
    fn rec(
        i: usize,
        assign: &mut Vec<usize>,
        n: usize,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if i == assign.len() {
            visit(assign);
            return;
        }
        for t in 0..n {
            if assign[..i].contains(&t) {
                continue;
            }
            assign[i] = t;
            rec(i + 1, assign, n, visit);
        }
    }
    let mut visit = |a: &[usize]| {
        if !(0..k).all(|i| node_ok(&p.nodes[i], &s.tokens[a[i]], &heads)) {
            return;
        }
        let edges_ok = p.edges.iter().all(|e| {
            let child = &s.tokens[a[e.child]];
            child.head == Some(a[e.parent]) && child.dep_label == e.dep_label
        });
        if !edges_ok {
            return;
        }
        let mut b = Bindings::new();
        for (name, &node) in &p.captures {
            let tok = a[node];
            let spec = &p.nodes[node];
            let span = if !spec.expand {
                Span::single(tok)
            } else if spec.entity_set.is_some() {
                heads[&tok].1
            } else {
                subtree_span(s, tok)
            };
            b.insert(name.clone(), span);
        }
        if let (Some(x), Some(y)) = (b.get("e1"), b.get("e2")) {
            if x.start <= y.end && y.start <= x.end {
                return;
            }
        }
        out.insert(b);
    };
    rec(0, &mut assign, n, &mut visit);
    out
}

/// Smallest connected superset of `marked` by exhaustive search over all
/// node subsets.
pub fn oracle_steiner(heads: &[Option<usize>], marked: &[usize]) -> BTreeSet<usize> {
    let n = heads.len();
    let need: u32 = marked.iter().map(|&m| 1u32 << m).fold(0, |a, b| a | b);
    let connected = |mask: u32| {
        let nodes: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let edges = nodes
            .iter()
            .filter(|&&i| heads[i].is_some_and(|h| mask & (1 << h) != 0))
            .count();
        // an induced subgraph of a tree is connected iff it has |V|-1 edges
        edges + 1 == nodes.len()
    };
    let mut best: Option<u32> = None;
    for mask in 0u32..(1 << n) {
        if mask & need != need || !connected(mask) {
            continue;
        }
        if best.is_none_or(|b| mask.count_ones() < b.count_ones()) {
            best = Some(mask);
        }
    }
    let best = best.unwrap();
    (0..n).filter(|&i| best & (1 << i) != 0).collect()
}

/// A random rooted tree as a head array.
pub fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![None; n];
    for i in 1..n {
        heads[order[i]] = Some(order[rng.gen_range(0..i)]);
    }
    heads
}

const WORDS: &[&str] = &["a", "b", "c", "A"];
const LEMMAS: &[&str] = &["x", "y", "Y"];
const TAGS: &[&str] = &["N", "V"];
const LABELS: &[&str] = &["l1", "l2", "l3"];
const TYPES: &[&str] = &["PER", "ORG"];

/// A valid random sentence with up to `max_len` tokens and random mentions.
pub fn random_sentence(rng: &mut ChaCha8Rng, id: &str, max_len: usize) -> Sentence {
    let n = rng.gen_range(1..=max_len);
    let heads = random_tree(rng, n);
    let mut tokens: Vec<Token> = (0..n)
        .map(|i| Token {
            index: i,
            word: WORDS.choose(rng).unwrap().to_string(),
            lemma: LEMMAS.choose(rng).unwrap().to_string(),
            pos: TAGS.choose(rng).unwrap().to_string(),
            entity_tag: "O".into(),
            head: heads[i],
            dep_label: if heads[i].is_none() { "root".into() } else { LABELS.choose(rng).unwrap().to_string() },
        })
        .collect();
    let mut i = 0;
    while i < n {
        if rng.gen_bool(0.3) {
            let len = rng.gen_range(1..=3).min(n - i);
            let ty = TYPES.choose(rng).unwrap();
            for j in 0..len {
                tokens[i + j].entity_tag = format!("{}-{ty}", if j == 0 { "B" } else { "I" });
            }
            i += len;
        } else {
            i += 1;
        }
    }
    let s = Sentence { id: id.to_string(), tokens, source: None };
    s.validate().unwrap();
    s
}

fn some_values(rng: &mut ChaCha8Rng, pool: &[&str]) -> Vec<String> {
    let k = rng.gen_range(1..=2);
    pool.choose_multiple(rng, k).map(|v| v.to_string()).collect()
}

/// A random pattern of up to `max_nodes` nodes over the generator's
/// vocabulary; e1 and e2 are present most of the time.
pub fn random_pattern(rng: &mut ChaCha8Rng, max_nodes: usize) -> Pattern {
    let k = rng.gen_range(1..=max_nodes);
    let mut nodes: Vec<PatternNode> = (0..k).map(|_| PatternNode::default()).collect();
    for node in &mut nodes {
        if rng.gen_bool(0.3) {
            node.word_set = Some(some_values(rng, WORDS).into_iter().collect());
        }
        if rng.gen_bool(0.2) {
            node.lemma_set = Some(some_values(rng, LEMMAS).into_iter().collect());
        }
        if rng.gen_bool(0.2) {
            node.pos_set = Some(some_values(rng, TAGS).into_iter().collect());
        }
        if rng.gen_bool(0.3) {
            node.entity_set = Some(some_values(rng, TYPES).into_iter().collect());
        }
    }
    let mut free: Vec<usize> = (0..k).collect();
    free.shuffle(rng);
    for name in ["e1", "e2"] {
        if rng.gen_bool(0.75) {
            if let Some(i) = free.pop() {
                nodes[i].capture = Some(name.to_string());
            }
        }
    }
    for (i, node) in nodes.iter_mut().enumerate() {
        let vacuous = node.word_set.is_none()
            && node.lemma_set.is_none()
            && node.pos_set.is_none()
            && node.entity_set.is_none();
        if node.capture.is_none() && (vacuous || rng.gen_bool(0.2)) {
            node.capture = Some(format!("c{i}"));
        }
        node.expand = node.capture.is_some() && rng.gen_bool(0.5);
    }
    let edges = (1..k)
        .map(|i| PatternEdge::new(rng.gen_range(0..i), i, *LABELS.choose(rng).unwrap()))
        .collect();
    Pattern::new("rand", nodes, edges).unwrap()
}

/// Bindings of engine matches, in engine order.
pub fn bindings_of(matches: &[depsearch::Match]) -> Vec<Bindings> {
    matches.iter().map(|m| m.bindings.clone()).collect()
}

/// Matcher agreement on one random (sentence, pattern) pair. Returns the
/// number of oracle matches, or a description of the disagreement.
pub fn matcher_trial(rng: &mut ChaCha8Rng, max_len: usize, max_nodes: usize) -> Result<usize, String> {
    let s = random_sentence(rng, "r", max_len);
    let p = random_pattern(rng, max_nodes);
    let got = bindings_of(&depsearch::engine::match_pattern(&p, &s));
    let want = oracle_matches(&p, &s);
    let got_set: BTreeSet<Bindings> = got.iter().cloned().collect();
    if got_set.len() != got.len() {
        return Err(format!("duplicate bindings for {}\n{:?}", p.to_json(), s));
    }
    if got_set != want {
        return Err(format!(
            "pattern {}\nsentence {:?}\nengine {:?}\noracle {:?}",
            p.to_json(),
            s.tokens,
            got_set,
            want
        ));
    }
    Ok(want.len())
}

/// Steiner agreement on one random (tree, marked set) pair.
pub fn steiner_trial(rng: &mut ChaCha8Rng, max_nodes: usize) -> Result<(), String> {
    let n = rng.gen_range(1..=max_nodes);
    let heads = random_tree(rng, n);
    let k = rng.gen_range(1..=n);
    let marked: Vec<usize> = (0..n).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
    let got = depsearch::patterns::minimal_connecting_subgraph(&heads, &marked).map_err(|e| e.to_string())?;
    let want = oracle_steiner(&heads, &marked);
    if got != want {
        return Err(format!("heads {heads:?} marked {marked:?}: got {got:?}, want {want:?}"));
    }
    Ok(())
}

pub const SEED_QUERIES: [&str; 3] = ["founded_by_active", "founded_by_passive", "founded_by_possessive"];

/// The three founded-by seed patterns compiled from the fixtures.
pub fn seed_patterns() -> Vec<Pattern> {
    fixture_pairs()
        .into_iter()
        .filter(|(q, _)| SEED_QUERIES.contains(&q.id.as_str()))
        .map(|(q, s)| depsearch::patterns::compile(&q, &s).unwrap())
        .collect()
}

/// Gold instances for founded-by: every planted fact is a positive, every
/// other ORG/PER pair a negative.
pub fn founded_by_gold(c: &depsearch::synth::SynthCorpus) -> Vec<depsearch::extractor::GoldInstance> {
    use depsearch::bootstrap::Label;
    use depsearch::extractor::GoldInstance;
    use depsearch::synth::FOUNDED_BY;
    let by_id: BTreeMap<&str, &Sentence> = c.sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut gold = Vec::new();
    for (n, f) in c.facts_for(FOUNDED_BY).enumerate() {
        let s = by_id[f.sentence_id.as_str()].clone();
        gold.push(GoldInstance::from_sentence(format!("pos{n}"), FOUNDED_BY, Label::Positive, s, f.e1, f.e2));
    }
    for (n, (i, e1, e2)) in c.typed_non_facts(FOUNDED_BY, &["ORG"], &["PER"]).into_iter().enumerate() {
        let s = c.sentences[i].clone();
        gold.push(GoldInstance::from_sentence(format!("neg{n}"), FOUNDED_BY, Label::Negative, s, e1, e2));
    }
    gold
}

/// Where each capture of `q` should land in its own sentence.
pub fn marked_spans(q: &QueryExample, s: &Sentence) -> BTreeMap<String, Span> {
    let mentions = oracle_mentions(s);
    q.elements
        .iter()
        .enumerate()
        .filter_map(|(i, el)| {
            let name = el.capture_name.clone()?;
            let span = if !el.expand {
                Span::single(i)
            } else if el.constraint(querylang::ConstraintKey::Entity).is_some() {
                mentions.iter().find(|(_, sp, _)| sp.contains(i)).unwrap().1
            } else {
                subtree_span(s, i)
            };
            Some((name, span))
        })
        .collect()
}
