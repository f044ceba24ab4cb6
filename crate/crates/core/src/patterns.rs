//! Tree patterns compiled from by-example queries.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Mention, Sentence, SentenceError, Token};
use crate::querylang::{Constraint, ConstraintKey, QueryElement, QueryError, QueryExample, Role};

pub const E1: &str = "e1";
pub const E2: &str = "e2";
pub const TRIGGER: &str = "t";

#[derive(Debug, Error)]
pub enum PatternError {
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("parse is not a valid tree: {0}")]
    InvalidParse(#[from] SentenceError),
    #[error("alignment failure: {0}")]
    Alignment(String),
    #[error("marked index {index} out of range for {len} tokens")]
    MarkOutOfRange { index: usize, len: usize },
    #[error("no marked nodes")]
    NothingMarked,
    #[error("captures {0} and {1} anchor at the same token")]
    CollapsedMarks(String, String),
    #[error("capture {0} has a bare entity constraint but its token is not in a mention")]
    NoMention(String),
    #[error("trigger token {0} lies inside an argument mention")]
    TriggerInsideMention(usize),
    #[error("mention {0} does not belong to sentence {1}")]
    ForeignMention(String, String),
    #[error("pattern edges do not form a rooted tree: {0}")]
    NotATree(String),
    #[error("node {0} has neither a constraint nor a capture")]
    VacuousNode(usize),
    #[error("duplicate capture name {0}")]
    DuplicateCapture(String),
    #[error("pattern {0} lacks an e1 or e2 capture")]
    NotRelational(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A pattern node. Absent sets are unconstrained. Word and lemma values are
/// stored lowercased and compared case-insensitively.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word_set: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma_set: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_set: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entity_set: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture: Option<String>,
    #[serde(default)]
    pub expand: bool,
}

fn set<I, S>(values: I) -> Option<BTreeSet<String>>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    Some(values.into_iter().map(Into::into).collect())
}

impl PatternNode {
    pub fn captured(name: impl Into<String>) -> Self {
        PatternNode { capture: Some(name.into()), ..Default::default() }
    }

    pub fn with_words<S: Into<String>>(mut self, words: impl IntoIterator<Item = S>) -> Self {
        self.word_set = set(words);
        self
    }

    pub fn with_lemmas<S: Into<String>>(mut self, lemmas: impl IntoIterator<Item = S>) -> Self {
        self.lemma_set = set(lemmas);
        self
    }

    pub fn with_pos<S: Into<String>>(mut self, tags: impl IntoIterator<Item = S>) -> Self {
        self.pos_set = set(tags);
        self
    }

    pub fn with_entities<S: Into<String>>(mut self, types: impl IntoIterator<Item = S>) -> Self {
        self.entity_set = set(types);
        self
    }

    pub fn expanded(mut self) -> Self {
        self.expand = true;
        self
    }

    pub fn is_constrained(&self) -> bool {
        self.word_set.is_some() || self.lemma_set.is_some() || self.pos_set.is_some() || self.entity_set.is_some()
    }

    fn normalize(&mut self) {
        for s in [&mut self.word_set, &mut self.lemma_set].into_iter().flatten() {
            *s = s.iter().map(|v| v.to_lowercase()).collect();
        }
    }

    /// Token test against pre-lowercased word and lemma. `mention_type` is
    /// the entity type when the token heads a mention.
    pub fn accepts(&self, word_lc: &str, lemma_lc: &str, pos: &str, mention_type: Option<&str>) -> bool {
        fn ok(set: &Option<BTreeSet<String>>, v: &str) -> bool {
            set.as_ref().is_none_or(|s| s.contains(v))
        }
        ok(&self.word_set, word_lc)
            && ok(&self.lemma_set, lemma_lc)
            && ok(&self.pos_set, pos)
            && match &self.entity_set {
                None => true,
                Some(types) => mention_type.is_some_and(|t| types.contains(t)),
            }
    }

    pub fn accepts_token(&self, token: &Token, mention_type: Option<&str>) -> bool {
        self.accepts(&token.word.to_lowercase(), &token.lemma.to_lowercase(), &token.pos, mention_type)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEdge {
    pub parent: usize,
    pub child: usize,
    pub dep_label: String,
}

impl PatternEdge {
    pub fn new(parent: usize, child: usize, dep_label: impl Into<String>) -> Self {
        PatternEdge { parent, child, dep_label: dep_label.into() }
    }
}

/// Admissible entity types for the `(e1, e2)` captures. An empty set means
/// unconstrained.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub e1: BTreeSet<String>,
    pub e2: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub id: String,
    pub root: usize,
    pub nodes: Vec<PatternNode>,
    pub edges: Vec<PatternEdge>,
    pub captures: BTreeMap<String, usize>,
    pub signature: Signature,
}

impl Pattern {
    /// Validates the tree shape and node invariants and derives the root,
    /// capture table and signature.
    pub fn new(id: impl Into<String>, mut nodes: Vec<PatternNode>, edges: Vec<PatternEdge>) -> Result<Self, PatternError> {
        let n = nodes.len();
        if n == 0 {
            return Err(PatternError::NotATree("no nodes".into()));
        }
        if edges.len() != n - 1 {
            return Err(PatternError::NotATree(format!("{} nodes but {} edges", n, edges.len())));
        }
        let mut parent = vec![None; n];
        for e in &edges {
            if e.parent >= n || e.child >= n || e.parent == e.child {
                return Err(PatternError::NotATree(format!("bad edge {} -> {}", e.parent, e.child)));
            }
            if parent[e.child].replace(e.parent).is_some() {
                return Err(PatternError::NotATree(format!("node {} has two parents", e.child)));
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        let [root] = roots[..] else {
            return Err(PatternError::NotATree(format!("{} roots", roots.len())));
        };
        // n - 1 edges, one parent each, one root: connected iff every node reaches the root
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = parent[cur] {
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(PatternError::NotATree("cycle".into()));
                }
            }
        }

        let mut captures = BTreeMap::new();
        for (i, node) in nodes.iter_mut().enumerate() {
            if !node.is_constrained() && node.capture.is_none() {
                return Err(PatternError::VacuousNode(i));
            }
            if let Some(name) = &node.capture {
                if captures.insert(name.clone(), i).is_some() {
                    return Err(PatternError::DuplicateCapture(name.clone()));
                }
            }
            node.normalize();
        }
        let entity_types = |name: &str| {
            captures
                .get(name)
                .and_then(|&i| nodes[i].entity_set.clone())
                .unwrap_or_default()
        };
        let signature = Signature { e1: entity_types(E1), e2: entity_types(E2) };
        Ok(Pattern { id: id.into(), root, nodes, edges, captures, signature })
    }

    /// True when the pattern captures both relation arguments.
    pub fn is_relational(&self) -> bool {
        self.captures.contains_key(E1) && self.captures.contains_key(E2)
    }

    pub fn require_relational(&self) -> Result<(), PatternError> {
        if self.is_relational() {
            Ok(())
        } else {
            Err(PatternError::NotRelational(self.id.clone()))
        }
    }

    /// Children of every node, in edge order.
    pub fn children(&self) -> Vec<Vec<(usize, &str)>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            out[e.parent].push((e.child, e.dep_label.as_str()));
        }
        out
    }

    pub fn parent_of(&self, node: usize) -> Option<(usize, &str)> {
        self.edges
            .iter()
            .find(|e| e.child == node)
            .map(|e| (e.parent, e.dep_label.as_str()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("patterns serialize")
    }
}

pub fn save_patterns(patterns: &[Pattern], path: impl AsRef<Path>) -> Result<(), PatternError> {
    let text = serde_json::to_string_pretty(patterns)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Reads either a single pattern object or an array of patterns, then
/// re-validates each one.
pub fn load_patterns(path: impl AsRef<Path>) -> Result<Vec<Pattern>, PatternError> {
    let text = std::fs::read_to_string(path)?;
    patterns_from_json(&text)
}

pub fn patterns_from_json(text: &str) -> Result<Vec<Pattern>, PatternError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let raw: Vec<Pattern> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        vec![serde_json::from_value(value)?]
    };
    raw.into_iter()
        .map(|p| Pattern::new(p.id, p.nodes, p.edges))
        .collect()
}

/// Smallest connected node set containing every marked node of a tree given
/// as a head array. In a tree this is the union of the paths between marked
/// nodes; computed by repeatedly pruning unmarked leaves.
pub fn minimal_connecting_subgraph(heads: &[Option<usize>], marked: &[usize]) -> Result<BTreeSet<usize>, PatternError> {
    let n = heads.len();
    if marked.is_empty() {
        return Err(PatternError::NothingMarked);
    }
    let mut is_marked = vec![false; n];
    for &m in marked {
        if m >= n {
            return Err(PatternError::MarkOutOfRange { index: m, len: n });
        }
        is_marked[m] = true;
    }
    let mut neighbours = vec![Vec::new(); n];
    for (i, h) in heads.iter().enumerate() {
        if let Some(h) = *h {
            if h >= n {
                return Err(PatternError::MarkOutOfRange { index: h, len: n });
            }
            neighbours[i].push(h);
            neighbours[h].push(i);
        }
    }
    let mut degree: Vec<usize> = neighbours.iter().map(Vec::len).collect();
    let mut removed = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| !is_marked[i] && degree[i] <= 1).collect();
    while let Some(v) = queue.pop_front() {
        if removed[v] {
            continue;
        }
        removed[v] = true;
        for &u in &neighbours[v] {
            if !removed[u] {
                degree[u] -= 1;
                if degree[u] <= 1 && !is_marked[u] {
                    queue.push_back(u);
                }
            }
        }
    }
    Ok((0..n).filter(|&i| !removed[i]).collect())
}

fn resolve(constraint: &Constraint, token: &Token, mention: Option<&Mention>, capture: &str) -> Result<BTreeSet<String>, PatternError> {
    if !constraint.bare {
        return Ok(constraint.values.iter().cloned().collect());
    }
    let value = match constraint.key {
        ConstraintKey::Word => token.word.clone(),
        ConstraintKey::Lemma => token.lemma.clone(),
        ConstraintKey::Pos => token.pos.clone(),
        ConstraintKey::Entity => mention
            .map(|m| m.entity_type.clone())
            .ok_or_else(|| PatternError::NoMention(capture.to_string()))?,
    };
    Ok(BTreeSet::from([value]))
}

/// Compiles a query against a parse of its stripped sentence.
///
/// Captures inside a multi-token mention are anchored at the mention head;
/// anchors stay on their own token. Unmarked nodes on the connecting paths
/// are constrained by lemma.
pub fn compile(query: &QueryExample, parse: &Sentence) -> Result<Pattern, PatternError> {
    parse.validate()?;
    for name in [E1, E2] {
        if query.capture(name).is_none() {
            return Err(QueryError::MissingArgument { missing: name.to_string() }.into());
        }
    }
    if query.elements.len() != parse.tokens.len() {
        return Err(PatternError::Alignment(format!(
            "query has {} elements but the parse has {} tokens",
            query.elements.len(),
            parse.tokens.len()
        )));
    }
    for (i, (el, tok)) in query.elements.iter().zip(&parse.tokens).enumerate() {
        if el.surface.to_lowercase() != tok.word.to_lowercase() {
            return Err(PatternError::Alignment(format!(
                "element {i} {:?} does not match token {:?}",
                el.surface, tok.word
            )));
        }
    }

    let mentions = parse.mentions();
    let mut mention_of = vec![None; parse.tokens.len()];
    for m in &mentions {
        mention_of[m.span.start..=m.span.end].fill(Some(m));
    }

    // token -> marked element
    let mut marks: BTreeMap<usize, &QueryElement> = BTreeMap::new();
    for (i, el) in query.elements.iter().enumerate() {
        let token = match el.role {
            Role::Context => continue,
            Role::Anchor => i,
            Role::Capture => mention_of[i].map_or(i, |m| m.head_token),
        };
        if let Some(prev) = marks.insert(token, el) {
            return Err(PatternError::CollapsedMarks(label(prev), label(el)));
        }
    }

    let marked: Vec<usize> = marks.keys().copied().collect();
    let selected = minimal_connecting_subgraph(&parse.heads(), &marked)?;
    let position: BTreeMap<usize, usize> = selected.iter().enumerate().map(|(node, &tok)| (tok, node)).collect();

    let mut nodes = Vec::with_capacity(selected.len());
    let mut edges = Vec::with_capacity(selected.len().saturating_sub(1));
    for &tok in &selected {
        let token = &parse.tokens[tok];
        let node = match marks.get(&tok) {
            Some(el) if el.role == Role::Anchor => PatternNode::default().with_words([el.surface.clone()]),
            Some(el) => {
                let name = el.capture_name.clone().expect("captures are named");
                let mut node = PatternNode::captured(name.clone());
                node.expand = el.expand;
                for c in &el.constraints {
                    let values = resolve(c, token, mention_of[tok], &name)?;
                    let slot = match c.key {
                        ConstraintKey::Word => &mut node.word_set,
                        ConstraintKey::Lemma => &mut node.lemma_set,
                        ConstraintKey::Pos => &mut node.pos_set,
                        ConstraintKey::Entity => &mut node.entity_set,
                    };
                    *slot = Some(values);
                }
                node
            }
            None => PatternNode::default().with_lemmas([token.lemma.clone()]),
        };
        nodes.push(node);
        if let Some(head) = token.head.filter(|h| selected.contains(h)) {
            edges.push(PatternEdge::new(position[&head], position[&tok], token.dep_label.clone()));
        }
    }
    Pattern::new(query.id.clone(), nodes, edges)
}

fn label(el: &QueryElement) -> String {
    el.capture_name.clone().unwrap_or_else(|| format!("${}", el.surface))
}

/// Turns an annotated sentence into a pattern: argument mention heads become
/// expanded `e1`/`e2` captures typed by their mentions, the optional trigger
/// becomes a `t` capture with a bare lemma constraint.
pub fn from_annotated_sentence(
    sentence: &Sentence,
    e1: &Mention,
    e2: &Mention,
    trigger: Option<usize>,
) -> Result<Pattern, PatternError> {
    let n = sentence.tokens.len();
    for m in [e1, e2] {
        if m.sentence_id != sentence.id || m.span.end >= n || !m.span.contains(m.head_token) {
            return Err(PatternError::ForeignMention(format!("{}{}", m.sentence_id, m.span), sentence.id.clone()));
        }
    }
    if let Some(t) = trigger {
        if t >= n {
            return Err(PatternError::MarkOutOfRange { index: t, len: n });
        }
        if e1.span.contains(t) || e2.span.contains(t) {
            return Err(PatternError::TriggerInsideMention(t));
        }
    }
    let elements = sentence
        .tokens
        .iter()
        .map(|tok| {
            let i = tok.index;
            if i == e1.head_token {
                QueryElement::capture(&tok.word, E1, true, vec![Constraint::values(ConstraintKey::Entity, [e1.entity_type.clone()])])
            } else if i == e2.head_token {
                QueryElement::capture(&tok.word, E2, true, vec![Constraint::values(ConstraintKey::Entity, [e2.entity_type.clone()])])
            } else if Some(i) == trigger {
                QueryElement::capture(&tok.word, TRIGGER, false, vec![Constraint::bare(ConstraintKey::Lemma)])
            } else {
                QueryElement::context(&tok.word)
            }
        })
        .collect();
    let id = format!("auto:{}:{}-{}:{}-{}", sentence.id, e1.span.start, e1.span.end, e2.span.start, e2.span.end);
    let query = QueryExample::from_elements(id, elements)?;
    compile(&query, sentence)
}
