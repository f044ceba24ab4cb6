//! By-example query markup.
//!
//! A query is an example sentence in which some words carry light markup.
//! Whitespace separates elements (whitespace inside `[...]` does not):
//!
//! ```text
//! element     := ["<>"] [name ":"] ["[" constraints "]"] surface
//!              | "$" surface
//! constraints := constraint ("," constraint)*
//! constraint  := key | key "=" value ("|" value)*
//! key         := "w" | "l" | "t" | "e"
//! ```
//!
//! A named element is a capture, `$word` is an anchor (required verbatim,
//! not captured), anything else is context. `<>` asks for the captured span
//! to be expanded at match time. A bare key (`[w]`) takes its value from the
//! example word itself.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConstraintKey {
    #[serde(rename = "w")]
    Word,
    #[serde(rename = "l")]
    Lemma,
    #[serde(rename = "t")]
    Pos,
    #[serde(rename = "e")]
    Entity,
}

impl ConstraintKey {
    pub fn parse(key: &str) -> Option<Self> {
        match key {
            "w" => Some(ConstraintKey::Word),
            "l" => Some(ConstraintKey::Lemma),
            "t" => Some(ConstraintKey::Pos),
            "e" => Some(ConstraintKey::Entity),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKey::Word => "w",
            ConstraintKey::Lemma => "l",
            ConstraintKey::Pos => "t",
            ConstraintKey::Entity => "e",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub key: ConstraintKey,
    pub values: Vec<String>,
    /// Take the value from the example token (`[w]`).
    pub bare: bool,
}

impl Constraint {
    pub fn bare(key: ConstraintKey) -> Self {
        Constraint { key, values: Vec::new(), bare: true }
    }

    pub fn values(key: ConstraintKey, values: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Constraint { key, values: values.into_iter().map(Into::into).collect(), bare: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Context,
    Anchor,
    Capture,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryElement {
    pub surface: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture_name: Option<String>,
    #[serde(default)]
    pub expand: bool,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

impl QueryElement {
    pub fn context(surface: impl Into<String>) -> Self {
        QueryElement {
            surface: surface.into(),
            role: Role::Context,
            capture_name: None,
            expand: false,
            constraints: Vec::new(),
        }
    }

    pub fn anchor(surface: impl Into<String>) -> Self {
        QueryElement { role: Role::Anchor, ..QueryElement::context(surface) }
    }

    pub fn capture(surface: impl Into<String>, name: impl Into<String>, expand: bool, constraints: Vec<Constraint>) -> Self {
        QueryElement {
            surface: surface.into(),
            role: Role::Capture,
            capture_name: Some(name.into()),
            expand,
            constraints,
        }
    }

    pub fn constraint(&self, key: ConstraintKey) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.key == key)
    }

    pub fn is_marked(&self) -> bool {
        self.role != Role::Context
    }
}

impl fmt::Display for QueryElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.role {
            Role::Context => f.write_str(&self.surface),
            Role::Anchor => write!(f, "${}", self.surface),
            Role::Capture => {
                if self.expand {
                    f.write_str("<>")?;
                }
                if let Some(name) = &self.capture_name {
                    write!(f, "{name}:")?;
                }
                if !self.constraints.is_empty() {
                    f.write_str("[")?;
                    for (i, c) in self.constraints.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        f.write_str(c.key.as_str())?;
                        if !c.bare {
                            write!(f, "={}", c.values.join("|"))?;
                        }
                    }
                    f.write_str("]")?;
                }
                f.write_str(&self.surface)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryExample {
    pub id: String,
    pub raw: String,
    pub elements: Vec<QueryElement>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("empty query")]
    Empty,
    #[error("unbalanced brackets at offset {offset}")]
    UnbalancedBrackets { offset: usize },
    #[error("unknown constraint key {key} at offset {offset}")]
    UnknownKey { key: String, offset: usize },
    #[error("duplicate constraint key {key} at offset {offset}")]
    DuplicateKey { key: String, offset: usize },
    #[error("empty disjunction at offset {offset}")]
    EmptyDisjunction { offset: usize },
    #[error("duplicate capture name {name} at offset {offset}")]
    DuplicateCapture { name: String, offset: usize },
    #[error("missing e1/e2: no {missing} capture")]
    MissingArgument { missing: String },
    #[error("empty surface word at offset {offset}")]
    EmptySurface { offset: usize },
    #[error("constraints without a capture name at offset {offset}")]
    UnnamedConstraints { offset: usize },
    #[error("`<>` without a capture name at offset {offset}")]
    UnnamedExpansion { offset: usize },
}

impl QueryError {
    /// Byte offset into the raw query text, when the error has one.
    pub fn offset(&self) -> Option<usize> {
        match *self {
            QueryError::UnbalancedBrackets { offset }
            | QueryError::UnknownKey { offset, .. }
            | QueryError::DuplicateKey { offset, .. }
            | QueryError::EmptyDisjunction { offset }
            | QueryError::DuplicateCapture { offset, .. }
            | QueryError::EmptySurface { offset }
            | QueryError::UnnamedConstraints { offset }
            | QueryError::UnnamedExpansion { offset } => Some(offset),
            QueryError::Empty | QueryError::MissingArgument { .. } => None,
        }
    }
}

/// Splits on whitespace outside brackets, yielding `(offset, unit)`.
fn split_units(text: &str) -> Result<Vec<(usize, &str)>, QueryError> {
    let mut units = Vec::new();
    let mut start: Option<usize> = None;
    let mut open: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        match ch {
            '[' => {
                if open.is_some() {
                    return Err(QueryError::UnbalancedBrackets { offset: i });
                }
                open = Some(i);
                start.get_or_insert(i);
            }
            ']' => {
                if open.take().is_none() {
                    return Err(QueryError::UnbalancedBrackets { offset: i });
                }
            }
            c if c.is_whitespace() && open.is_none() => {
                if let Some(s) = start.take() {
                    units.push((s, &text[s..i]));
                }
            }
            _ => {
                start.get_or_insert(i);
            }
        }
    }
    if let Some(offset) = open {
        return Err(QueryError::UnbalancedBrackets { offset });
    }
    if let Some(s) = start {
        units.push((s, &text[s..]));
    }
    Ok(units)
}

fn capture_name_len(unit: &str) -> Option<usize> {
    let colon = unit.find(':')?;
    let name = &unit[..colon];
    let mut chars = name.chars();
    let first = chars.next()?;
    if !(first.is_ascii_alphabetic() || first == '_') {
        return None;
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_').then_some(colon)
}

fn parse_constraints(body: &str, offset: usize) -> Result<Vec<Constraint>, QueryError> {
    let mut out: Vec<Constraint> = Vec::new();
    let mut pos = 0;
    for part in body.split(',') {
        let part_offset = offset + pos;
        pos += part.len() + 1;
        let part = part.trim();
        let (key, values) = match part.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v)),
            None => (part, None),
        };
        let key = ConstraintKey::parse(key).ok_or_else(|| QueryError::UnknownKey {
            key: key.to_string(),
            offset: part_offset,
        })?;
        if out.iter().any(|c| c.key == key) {
            return Err(QueryError::DuplicateKey { key: key.as_str().to_string(), offset: part_offset });
        }
        let constraint = match values {
            None => Constraint::bare(key),
            Some(v) => {
                let values: Vec<String> = v.split('|').map(|x| x.trim().to_string()).collect();
                if values.iter().any(String::is_empty) {
                    return Err(QueryError::EmptyDisjunction { offset: part_offset });
                }
                Constraint::values(key, values)
            }
        };
        out.push(constraint);
    }
    Ok(out)
}

fn parse_unit(unit: &str, offset: usize) -> Result<QueryElement, QueryError> {
    let check_surface = |surface: &str, at: usize| -> Result<(), QueryError> {
        if surface.is_empty() {
            return Err(QueryError::EmptySurface { offset: at });
        }
        if let Some(i) = surface.find(['[', ']']) {
            return Err(QueryError::UnbalancedBrackets { offset: at + i });
        }
        Ok(())
    };

    if let Some(surface) = unit.strip_prefix('$') {
        if surface.starts_with('[') {
            return Err(QueryError::UnnamedConstraints { offset });
        }
        check_surface(surface, offset + 1)?;
        return Ok(QueryElement::anchor(surface));
    }

    let (expand, rest, mut at) = match unit.strip_prefix("<>") {
        Some(rest) => (true, rest, offset + 2),
        None => (false, unit, offset),
    };
    let (name, rest) = match capture_name_len(rest) {
        Some(len) => {
            let r = &rest[len + 1..];
            at += len + 1;
            (Some(&rest[..len]), r)
        }
        None => (None, rest),
    };
    let (constraints, surface) = match rest.strip_prefix('[') {
        Some(inner) => {
            let close = inner.find(']').ok_or(QueryError::UnbalancedBrackets { offset: at })?;
            let constraints = parse_constraints(&inner[..close], at + 1)?;
            at += close + 2;
            (constraints, &inner[close + 1..])
        }
        None => (Vec::new(), rest),
    };
    check_surface(surface, at)?;

    match name {
        Some(name) => Ok(QueryElement::capture(surface, name, expand, constraints)),
        None if expand => Err(QueryError::UnnamedExpansion { offset }),
        None if !constraints.is_empty() => Err(QueryError::UnnamedConstraints { offset }),
        None => Ok(QueryElement::context(surface)),
    }
}

/// Parses the markup into elements without requiring `e1`/`e2` captures.
pub fn parse_elements(text: &str) -> Result<Vec<QueryElement>, QueryError> {
    split_units(text)?
        .into_iter()
        .map(|(offset, unit)| parse_unit(unit, offset))
        .collect()
}

pub fn parse_query(text: &str) -> Result<QueryExample, QueryError> {
    parse_query_with_id("query", text)
}

pub fn parse_query_with_id(id: &str, text: &str) -> Result<QueryExample, QueryError> {
    let units = split_units(text)?;
    if units.is_empty() {
        return Err(QueryError::Empty);
    }
    let mut elements = Vec::with_capacity(units.len());
    let mut names = BTreeSet::new();
    for (offset, unit) in units {
        let element = parse_unit(unit, offset)?;
        if let Some(name) = &element.capture_name {
            if !names.insert(name.clone()) {
                return Err(QueryError::DuplicateCapture { name: name.clone(), offset });
            }
        }
        elements.push(element);
    }
    let missing: Vec<&str> = ["e1", "e2"].into_iter().filter(|n| !names.contains(*n)).collect();
    if !missing.is_empty() {
        return Err(QueryError::MissingArgument { missing: missing.join("/") });
    }
    Ok(QueryExample { id: id.to_string(), raw: text.to_string(), elements })
}

impl QueryExample {
    /// Builds a query from already-structured elements, checking the same
    /// capture invariants as [`parse_query`].
    pub fn from_elements(id: impl Into<String>, elements: Vec<QueryElement>) -> Result<Self, QueryError> {
        let mut names = BTreeSet::new();
        for element in &elements {
            if let Some(name) = &element.capture_name {
                if !names.insert(name.clone()) {
                    return Err(QueryError::DuplicateCapture { name: name.clone(), offset: 0 });
                }
            }
        }
        let missing: Vec<&str> = ["e1", "e2"].into_iter().filter(|n| !names.contains(*n)).collect();
        if !missing.is_empty() {
            return Err(QueryError::MissingArgument { missing: missing.join("/") });
        }
        let mut q = QueryExample { id: id.into(), raw: String::new(), elements };
        q.raw = q.render();
        Ok(q)
    }

    /// Canonical markup; parsing it again yields the same elements.
    pub fn render(&self) -> String {
        self.elements.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    }

    /// The plain example sentence, markup removed.
    pub fn strip(&self) -> String {
        self.elements.iter().map(|e| e.surface.as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn capture(&self, name: &str) -> Option<(usize, &QueryElement)> {
        self.elements
            .iter()
            .enumerate()
            .find(|(_, e)| e.capture_name.as_deref() == Some(name))
    }

    /// Replaces the word (or else lemma) constraint of every capture whose
    /// surface is a key of `triggers` with the mapped list.
    pub fn expand_triggers(&self, triggers: &BTreeMap<String, Vec<String>>) -> TriggerExpansion {
        let mut query = self.clone();
        let mut used = BTreeSet::new();
        for element in &mut query.elements {
            if element.role != Role::Capture {
                continue;
            }
            let Some((key, list)) = triggers
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case(&element.surface))
            else {
                continue;
            };
            let target = element
                .constraints
                .iter_mut()
                .filter(|c| matches!(c.key, ConstraintKey::Word | ConstraintKey::Lemma))
                .min_by_key(|c| c.key);
            if let Some(c) = target {
                c.values = list.clone();
                c.bare = false;
                used.insert(key.clone());
            }
        }
        let unused_keys: Vec<String> = triggers.keys().filter(|k| !used.contains(*k)).cloned().collect();
        for key in &unused_keys {
            log::warn!("query {}: trigger list {key:?} matches no capture", self.id);
        }
        query.raw = query.render();
        TriggerExpansion { query, unused_keys }
    }
}

pub fn strip(query: &QueryExample) -> String {
    query.strip()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerExpansion {
    pub query: QueryExample,
    /// Keys that matched no eligible capture.
    pub unused_keys: Vec<String>,
}

#[derive(Debug, Error)]
#[error("query file line {line}: {source}")]
pub struct QueryFileError {
    pub line: usize,
    #[source]
    pub source: QueryError,
}

/// Reads a query file: one query per line, `#` comments, optional `id<TAB>`
/// prefix. Queries without an id are named `q<line>`.
pub fn parse_query_file(text: &str) -> Result<Vec<QueryExample>, QueryFileError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, body) = match line.split_once('\t') {
            Some((id, body)) => (id.trim().to_string(), body),
            None => (format!("q{line_no}"), line),
        };
        let q = parse_query_with_id(&id, body.trim()).map_err(|source| QueryFileError { line: line_no, source })?;
        out.push(q);
    }
    Ok(out)
}

/// Trigger lists: a JSON object mapping a word to its alternatives.
pub fn parse_trigger_map(json: &str) -> Result<BTreeMap<String, Vec<String>>, serde_json::Error> {
    serde_json::from_str(json)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUNDED: &str = "<>e2:[e=PER]Mary t:[w]founded <>e1:[e=ORG]Microsoft .";

    #[test]
    fn founded_by_query() {
        let q = parse_query(FOUNDED).unwrap();
        assert_eq!(q.elements.len(), 4);
        let e2 = &q.elements[0];
        assert_eq!(e2.capture_name.as_deref(), Some("e2"));
        assert!(e2.expand);
        assert_eq!(e2.constraints, vec![Constraint::values(ConstraintKey::Entity, ["PER"])]);
        let t = &q.elements[1];
        assert_eq!(t.capture_name.as_deref(), Some("t"));
        assert!(!t.expand);
        assert_eq!(t.constraints, vec![Constraint::bare(ConstraintKey::Word)]);
        let e1 = &q.elements[2];
        assert_eq!(e1.constraints, vec![Constraint::values(ConstraintKey::Entity, ["ORG"])]);
        assert_eq!(q.elements[3], QueryElement::context("."));
        assert_eq!(q.strip(), "Mary founded Microsoft .");
    }

    #[test]
    fn unmarked_sentence_misses_arguments() {
        let elements = parse_elements("John likes swimming .").unwrap();
        assert_eq!(elements.len(), 4);
        assert!(elements.iter().all(|e| e.role == Role::Context));
        let err = parse_query("John likes swimming .").unwrap_err();
        assert!(matches!(err, QueryError::MissingArgument { .. }));
        assert!(err.to_string().contains("missing e1/e2"));
    }

    #[test]
    fn grammar_errors() {
        let err = parse_query("e1:[q=PER]John").unwrap_err();
        assert_eq!(err, QueryError::UnknownKey { key: "q".into(), offset: 4 });
        assert!(err.to_string().contains("unknown constraint key q"));

        assert!(matches!(parse_query("e1:[e=PER John e2:x"), Err(QueryError::UnbalancedBrackets { .. })));
        assert!(matches!(parse_query("e1:e=PER]John e2:x"), Err(QueryError::UnbalancedBrackets { .. })));
        assert!(matches!(parse_query("e1:[e=]John e2:x"), Err(QueryError::EmptyDisjunction { .. })));
        assert!(matches!(parse_query("e1:[w=a||b]John e2:x"), Err(QueryError::EmptyDisjunction { .. })));
        assert!(matches!(parse_query("e1:John e1:Mary e2:x"), Err(QueryError::DuplicateCapture { .. })));
        assert!(matches!(parse_query("e1:[w,w]John e2:x"), Err(QueryError::DuplicateKey { .. })));
        assert!(matches!(parse_query("[e=PER]John e1:a e2:b"), Err(QueryError::UnnamedConstraints { .. })));
        assert!(matches!(parse_query("<>John e1:a e2:b"), Err(QueryError::UnnamedExpansion { .. })));
        assert!(matches!(parse_query("e1:[e=PER] e2:b"), Err(QueryError::EmptySurface { .. })));
        assert!(matches!(parse_query("   "), Err(QueryError::Empty)));
    }

    #[test]
    fn spaced_disjunction_inside_brackets() {
        let q = parse_query("<>e1:[e=PER]John 's t:[w=wife | husband]wife , <>e2:[e=PER]Mary").unwrap();
        assert_eq!(q.elements.len(), 5);
        assert_eq!(q.elements[2].constraints[0].values, vec!["wife", "husband"]);
        assert_eq!(q.strip(), "John 's wife , Mary");
    }

    #[test]
    fn anchors_strip_unprefixed() {
        let q = parse_query("<>e1:[e=ORG]Microsoft was t:[w]founded $by <>e2:[e=PER]Mary .").unwrap();
        assert_eq!(q.elements[3].role, Role::Anchor);
        assert_eq!(q.strip(), "Microsoft was founded by Mary .");
        let q = parse_query("e1:a $-LRB- e2:b $-RRB-").unwrap();
        assert_eq!(q.elements[1], QueryElement::anchor("-LRB-"));
    }

    #[test]
    fn all_context_strip_is_identity() {
        let raw = "John likes swimming .";
        let text: Vec<String> = parse_elements(raw).unwrap().into_iter().map(|e| e.surface).collect();
        assert_eq!(text.join(" "), raw);
    }

    #[test]
    fn render_round_trip() {
        let q = parse_query(FOUNDED).unwrap();
        assert_eq!(q.render(), FOUNDED);
        let again = parse_query(&q.render()).unwrap();
        assert_eq!(again.elements, q.elements);
    }

    #[test]
    fn trigger_expansion() {
        let q = parse_query(FOUNDED).unwrap();
        let map = BTreeMap::from([("founded".to_string(), vec!["founded".to_string(), "created".to_string()])]);
        let x = q.expand_triggers(&map);
        assert!(x.unused_keys.is_empty());
        assert_eq!(x.query.elements[1].constraints, vec![Constraint::values(ConstraintKey::Word, ["founded", "created"])]);
        assert_eq!(x.query.elements[0], q.elements[0]);

        assert_eq!(q.expand_triggers(&BTreeMap::new()).query, q);

        let map = BTreeMap::from([("married".to_string(), vec!["wed".to_string()])]);
        let x = q.expand_triggers(&map);
        assert_eq!(x.unused_keys, vec!["married"]);
        assert_eq!(x.query.elements, q.elements);
    }

    #[test]
    fn lemma_constraint_expands_when_no_word_constraint() {
        let q = parse_query("<>e1:[e=PER]John t:[l]married <>e2:[e=PER]Mary").unwrap();
        let map = BTreeMap::from([("married".to_string(), vec!["marry".to_string(), "wed".to_string()])]);
        let x = q.expand_triggers(&map);
        assert_eq!(x.query.elements[1].constraints, vec![Constraint::values(ConstraintKey::Lemma, ["marry", "wed"])]);
    }

    #[test]
    fn query_file_ids_and_comments() {
        let text = "# founded-by\nfb1\t<>e2:[e=PER]Mary t:[w]founded <>e1:[e=ORG]Microsoft .\n\ne1:a e2:b\n";
        let qs = parse_query_file(text).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].id, "fb1");
        assert_eq!(qs[1].id, "q4");
        let err = parse_query_file("ok\te1:a e2:b\nbad\te1:[z]a e2:b\n").unwrap_err();
        assert_eq!(err.line, 2);
    }
}
