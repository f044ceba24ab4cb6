//! Dependency-parsed, entity-tagged sentences: CoNLL-U ingestion, validation,
//! mention extraction and versioned snapshots.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SNAPSHOT_FORMAT: &str = "depsearch-corpus";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Inclusive token range `[start, end]`. Serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn single(index: usize) -> Self {
        Span { start: index, end: index }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn contains_span(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Self {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(span: Span) -> Self {
        [span.start, span.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub word: String,
    pub lemma: String,
    pub pos: String,
    /// BIO tag with type, e.g. `B-PER`, `I-ORG`, or `O`.
    pub entity_tag: String,
    /// `None` for the root.
    pub head: Option<usize>,
    pub dep_label: String,
}

/// A parsed BIO tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bio<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

impl Token {
    pub fn bio(&self) -> Option<Bio<'_>> {
        parse_bio(&self.entity_tag)
    }
}

fn parse_bio(tag: &str) -> Option<Bio<'_>> {
    if tag == "O" {
        return Some(Bio::Outside);
    }
    let (prefix, ty) = tag.split_once('-')?;
    if ty.is_empty() {
        return None;
    }
    match prefix {
        "B" => Some(Bio::Begin(ty)),
        "I" => Some(Bio::Inside(ty)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub sentence_id: String,
    pub span: Span,
    pub entity_type: String,
    pub head_token: usize,
}

/// A violated sentence invariant. Token positions are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SentenceError {
    #[error("empty sentence")]
    Empty,
    #[error("token {token}: index field is {found}")]
    MisnumberedToken { token: usize, found: usize },
    #[error("token {token}: self-loop head")]
    SelfLoop { token: usize },
    #[error("token {token}: head {head} out of range")]
    HeadOutOfRange { token: usize, head: usize },
    #[error("no root token")]
    NoRoot,
    #[error("multiple roots (tokens {first} and {second})")]
    MultipleRoots { first: usize, second: usize },
    #[error("token {token}: head cycle")]
    Cycle { token: usize },
    #[error("token {token}: ill-formed BIO tag {tag:?}")]
    IllFormedBio { token: usize, tag: String },
}

impl SentenceError {
    fn token(&self) -> Option<usize> {
        match *self {
            SentenceError::MisnumberedToken { token, .. }
            | SentenceError::SelfLoop { token }
            | SentenceError::HeadOutOfRange { token, .. }
            | SentenceError::Cycle { token }
            | SentenceError::IllFormedBio { token, .. } => Some(token),
            SentenceError::MultipleRoots { second, .. } => Some(second),
            SentenceError::Empty | SentenceError::NoRoot => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("sentence {sentence}, line {line}: {message}")]
    Malformed {
        sentence: String,
        line: usize,
        message: String,
    },
    #[error("sentence {sentence}, line {line}: {source}")]
    Invalid {
        sentence: String,
        line: usize,
        #[source]
        source: SentenceError,
    },
    #[error("duplicate sentence id {0:?}")]
    DuplicateId(String),
    #[error("snapshot version mismatch: {0}")]
    VersionMismatch(String),
    #[error("snapshot line {line}: {source}")]
    Snapshot {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn heads(&self) -> Vec<Option<usize>> {
        self.tokens.iter().map(|t| t.head).collect()
    }

    pub fn root(&self) -> Option<usize> {
        self.tokens.iter().position(|t| t.head.is_none())
    }

    /// Dependents of every token, each list in ascending order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.tokens.len()];
        for token in &self.tokens {
            if let Some(head) = token.head {
                children[head].push(token.index);
            }
        }
        children
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.word.as_str())
    }

    pub fn text(&self) -> String {
        self.words().collect::<Vec<_>>().join(" ")
    }

    /// Checks every structural invariant: index numbering, a single root,
    /// an acyclic head relation covering all tokens, and BIO well-formedness.
    pub fn validate(&self) -> Result<(), SentenceError> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(SentenceError::Empty);
        }
        let mut root = None;
        for (i, token) in self.tokens.iter().enumerate() {
            if token.index != i {
                return Err(SentenceError::MisnumberedToken { token: i, found: token.index });
            }
            match token.head {
                Some(h) if h == i => return Err(SentenceError::SelfLoop { token: i }),
                Some(h) if h >= n => return Err(SentenceError::HeadOutOfRange { token: i, head: h }),
                Some(_) => {}
                None => match root {
                    Some(first) => return Err(SentenceError::MultipleRoots { first, second: i }),
                    None => root = Some(i),
                },
            }
        }
        if root.is_none() {
            return Err(SentenceError::NoRoot);
        }

        // 0 = unvisited, 1 = on the current walk, 2 = known to reach the root
        let mut state = vec![0u8; n];
        for start in 0..n {
            let mut walk = Vec::new();
            let mut cur = Some(start);
            while let Some(c) = cur {
                match state[c] {
                    2 => break,
                    1 => return Err(SentenceError::Cycle { token: c }),
                    _ => {
                        state[c] = 1;
                        walk.push(c);
                        cur = self.tokens[c].head;
                    }
                }
            }
            for w in walk {
                state[w] = 2;
            }
        }

        let mut prev: Option<&str> = None;
        for (i, token) in self.tokens.iter().enumerate() {
            let bad = || SentenceError::IllFormedBio { token: i, tag: token.entity_tag.clone() };
            prev = match token.bio().ok_or_else(bad)? {
                Bio::Outside => None,
                Bio::Begin(ty) => Some(ty),
                Bio::Inside(ty) => {
                    if prev != Some(ty) {
                        return Err(bad());
                    }
                    Some(ty)
                }
            };
        }
        Ok(())
    }

    /// One mention per maximal BIO run. The mention head is the first span
    /// token whose head lies outside the span.
    pub fn mentions(&self) -> Vec<Mention> {
        let mut runs: Vec<(usize, usize, &str)> = Vec::new();
        for (i, token) in self.tokens.iter().enumerate() {
            match token.bio() {
                Some(Bio::Begin(ty)) => runs.push((i, i, ty)),
                Some(Bio::Inside(ty)) => match runs.last_mut() {
                    Some(run) if run.1 + 1 == i && run.2 == ty => run.1 = i,
                    _ => runs.push((i, i, ty)),
                },
                _ => {}
            }
        }
        runs.into_iter()
            .map(|(start, end, ty)| {
                let span = Span::new(start, end);
                let head_token = (start..=end)
                    .find(|&i| self.tokens[i].head.is_none_or(|h| !span.contains(h)))
                    .unwrap_or(start);
                Mention {
                    sentence_id: self.id.clone(),
                    span,
                    entity_type: ty.to_string(),
                    head_token,
                }
            })
            .collect()
    }
}

pub fn extract_mentions(sentence: &Sentence) -> Vec<Mention> {
    sentence.mentions()
}

/// How to react to an invalid sentence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ParseMode {
    /// Abort on the first invalid sentence.
    #[default]
    Strict,
    /// Skip invalid sentences and log them.
    Lenient,
}

/// Which CoNLL-U column feeds `Token::pos`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PosColumn {
    Upos,
    Xpos,
    /// XPOS when present, UPOS otherwise.
    #[default]
    Auto,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    pub mode: ParseMode,
    pub pos: PosColumn,
}

impl ParseOptions {
    pub fn lenient() -> Self {
        ParseOptions { mode: ParseMode::Lenient, ..Default::default() }
    }
}

struct PendingSentence {
    id: Option<String>,
    source: Option<String>,
    tokens: Vec<Token>,
    lines: Vec<usize>,
    first_line: usize,
    error: Option<CorpusError>,
}

impl PendingSentence {
    fn new(line: usize) -> Self {
        PendingSentence {
            id: None,
            source: None,
            tokens: Vec::new(),
            lines: Vec::new(),
            first_line: line,
            error: None,
        }
    }

    fn is_blank(&self) -> bool {
        self.tokens.is_empty() && self.error.is_none() && self.id.is_none()
    }
}

/// Parses CoNLL-U. Entity tags come from `NER=` entries in the MISC column;
/// a token without one is tagged `O`. Multiword-token ranges and empty nodes
/// are ignored, as is the DEPS column.
pub fn parse_conllu<R: BufRead>(reader: R, options: ParseOptions) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut pending = PendingSentence::new(1);
    let mut seen_ids: HashMap<String, ()> = HashMap::new();

    let mut finish = |pending: PendingSentence, sentences: &mut Vec<Sentence>| -> Result<(), CorpusError> {
        if pending.is_blank() {
            return Ok(());
        }
        let id = pending.id.clone().unwrap_or_else(|| format!("s{}", sentences.len() + 1));
        let result = match pending.error {
            Some(e) => Err(e),
            None => {
                let sentence = Sentence { id: id.clone(), tokens: pending.tokens, source: pending.source };
                match sentence.validate() {
                    Ok(()) if seen_ids.contains_key(&id) => Err(CorpusError::DuplicateId(id.clone())),
                    Ok(()) => Ok(sentence),
                    Err(source) => {
                        let line = source
                            .token()
                            .and_then(|t| pending.lines.get(t).copied())
                            .unwrap_or(pending.first_line);
                        Err(CorpusError::Invalid { sentence: id.clone(), line, source })
                    }
                }
            }
        };
        match result {
            Ok(sentence) => {
                seen_ids.insert(id, ());
                sentences.push(sentence);
                Ok(())
            }
            Err(e) => match options.mode {
                ParseMode::Strict => Err(e),
                ParseMode::Lenient => {
                    log::warn!("skipping sentence: {e}");
                    Ok(())
                }
            },
        }
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            let done = std::mem::replace(&mut pending, PendingSentence::new(lineno + 1));
            finish(done, &mut sentences)?;
            continue;
        }
        if pending.is_blank() {
            pending.first_line = lineno;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => pending.id = Some(value.trim().to_string()),
                    "source" => pending.source = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        if pending.error.is_some() {
            continue;
        }
        match parse_token_line(line, pending.tokens.len(), options.pos) {
            Ok(Some(token)) => {
                pending.tokens.push(token);
                pending.lines.push(lineno);
            }
            Ok(None) => {}
            Err(message) => {
                let sentence = pending
                    .id
                    .clone()
                    .unwrap_or_else(|| format!("s{}", sentences.len() + 1));
                pending.error = Some(CorpusError::Malformed { sentence, line: lineno, message });
            }
        }
    }
    finish(pending, &mut sentences)?;
    Ok(sentences)
}

fn parse_token_line(line: &str, position: usize, pos_column: PosColumn) -> Result<Option<Token>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(format!("expected 10 tab-separated columns, found {}", cols.len()));
    }
    let id = cols[0];
    if id.contains('-') || id.contains('.') {
        return Ok(None);
    }
    let id: usize = id.parse().map_err(|_| format!("bad token id {id:?}"))?;
    if id != position + 1 {
        return Err(format!("token id {id} out of sequence (expected {})", position + 1));
    }
    let head: usize = cols[6]
        .parse()
        .map_err(|_| format!("bad head {:?}", cols[6]))?;
    let pos = match pos_column {
        PosColumn::Upos => cols[3],
        PosColumn::Xpos => cols[4],
        PosColumn::Auto if cols[4] != "_" => cols[4],
        PosColumn::Auto => cols[3],
    };
    let entity_tag = cols[9]
        .split('|')
        .find_map(|entry| entry.strip_prefix("NER="))
        .unwrap_or("O");
    Ok(Some(Token {
        index: position,
        word: cols[1].to_string(),
        lemma: cols[2].to_string(),
        pos: pos.to_string(),
        entity_tag: entity_tag.to_string(),
        head: head.checked_sub(1),
        dep_label: cols[7].to_string(),
    }))
}

/// Writes sentences as CoNLL-U. The part-of-speech tag goes to XPOS.
pub fn write_conllu<W: Write>(mut out: W, sentences: &[Sentence]) -> std::io::Result<()> {
    for sentence in sentences {
        writeln!(out, "# sent_id = {}", sentence.id)?;
        if let Some(source) = &sentence.source {
            writeln!(out, "# source = {source}")?;
        }
        writeln!(out, "# text = {}", sentence.text())?;
        for t in &sentence.tokens {
            let misc = if t.entity_tag == "O" {
                "_".to_string()
            } else {
                format!("NER={}", t.entity_tag)
            };
            writeln!(
                out,
                "{}\t{}\t{}\t_\t{}\t_\t{}\t{}\t_\t{}",
                t.index + 1,
                t.word,
                t.lemma,
                t.pos,
                t.head.map_or(0, |h| h + 1),
                t.dep_label,
                misc
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn to_conllu_string(sentences: &[Sentence]) -> String {
    let mut buf = Vec::new();
    write_conllu(&mut buf, sentences).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CoNLL-U output is UTF-8")
}

pub fn parse_conllu_str(text: &str, options: ParseOptions) -> Result<Vec<Sentence>, CorpusError> {
    parse_conllu(text.as_bytes(), options)
}

/// An immutable, validated sentence store.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    sentences: Vec<Sentence>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(sentences: Vec<Sentence>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(sentences.len());
        for (i, s) in sentences.iter().enumerate() {
            if by_id.insert(s.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Corpus { sentences, by_id })
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, ordinal: usize) -> Option<&Sentence> {
        self.sentences.get(ordinal)
    }

    pub fn ordinal_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn by_id(&self, id: &str) -> Option<&Sentence> {
        self.ordinal_of(id).map(|i| &self.sentences[i])
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// SHA-256 over the canonical snapshot encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.sentences {
            hasher.update(serde_json::to_vec(s).expect("sentences serialize"));
            hasher.update(b"\n");
        }
        hex(&hasher.finalize())
    }

    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotHeader {
    format: String,
    version: u32,
    count: usize,
}

/// Writes a JSONL snapshot: a versioned header line, then one sentence per line.
pub fn save_corpus(sentences: &[Sentence], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = SnapshotHeader {
        format: SNAPSHOT_FORMAT.to_string(),
        version: SNAPSHOT_VERSION,
        count: sentences.len(),
    };
    serde_json::to_writer(&mut out, &header).map_err(|source| CorpusError::Snapshot { line: 1, source })?;
    out.write_all(b"\n")?;
    for (i, s) in sentences.iter().enumerate() {
        serde_json::to_writer(&mut out, s).map_err(|source| CorpusError::Snapshot { line: i + 2, source })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Sentence>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| CorpusError::VersionMismatch("missing header".into()))?;
    let header: SnapshotHeader = serde_json::from_str(&header)
        .map_err(|e| CorpusError::VersionMismatch(format!("unreadable header: {e}")))?;
    if header.format != SNAPSHOT_FORMAT || header.version != SNAPSHOT_VERSION {
        return Err(CorpusError::VersionMismatch(format!(
            "expected {SNAPSHOT_FORMAT} v{SNAPSHOT_VERSION}, found {} v{}",
            header.format, header.version
        )));
    }
    let mut sentences = Vec::with_capacity(header.count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let s: Sentence =
            serde_json::from_str(&line).map_err(|source| CorpusError::Snapshot { line: i + 2, source })?;
        sentences.push(s);
    }
    if sentences.len() != header.count {
        return Err(CorpusError::VersionMismatch(format!(
            "header announces {} sentences, found {}",
            header.count,
            sentences.len()
        )));
    }
    Ok(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(index: usize, word: &str, tag: &str, head: Option<usize>) -> Token {
        Token {
            index,
            word: word.into(),
            lemma: word.to_lowercase(),
            pos: "X".into(),
            entity_tag: tag.into(),
            head,
            dep_label: if head.is_none() { "root".into() } else { "dep".into() },
        }
    }

    fn sent(tokens: Vec<Token>) -> Sentence {
        Sentence { id: "t".into(), tokens, source: None }
    }

    #[test]
    fn empty_stream() {
        assert!(parse_conllu_str("", ParseOptions::default()).unwrap().is_empty());
        assert!(parse_conllu_str("\n\n", ParseOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn self_loop_is_rejected() {
        let text = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t2\tdep\t_\t_\n";
        let err = parse_conllu_str(text, ParseOptions::default()).unwrap_err();
        match err {
            CorpusError::Invalid { line, source: SentenceError::SelfLoop { token: 1 }, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_string(text).contains("self-loop head"));
    }

    fn err_string(text: &str) -> String {
        parse_conllu_str(text, ParseOptions::default()).unwrap_err().to_string()
    }

    #[test]
    fn structural_errors() {
        let cycle = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t3\tdep\t_\t_\n3\tc\tc\tX\t_\t_\t2\tdep\t_\t_\n";
        assert!(err_string(cycle).contains("cycle"));
        let range = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t9\tdep\t_\t_\n";
        assert!(err_string(range).contains("out of range"));
        let columns = "# sent_id = x7\n1\ta\ta\tX\t_\t_\t0\troot\t_\n";
        let msg = err_string(columns);
        assert!(msg.contains("x7") && msg.contains("line 2") && msg.contains("columns"), "{msg}");
        let bio = "1\ta\ta\tX\t_\t_\t0\troot\t_\tNER=I-PER\n";
        assert!(err_string(bio).contains("BIO"));
        let two_roots = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n2\tb\tb\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(err_string(two_roots).contains("multiple roots"));
    }

    #[test]
    fn lenient_mode_skips_bad_sentences() {
        let text = "1\ta\ta\tX\t_\t_\t1\troot\t_\t_\n\n# sent_id = ok\n1\tb\tb\tX\t_\t_\t0\troot\t_\t_\n";
        let out = parse_conllu_str(text, ParseOptions::lenient()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "ok");
        assert!(parse_conllu_str(text, ParseOptions::default()).is_err());
    }

    #[test]
    fn sequential_ids_and_multiword_ranges() {
        let text = "1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n1\tde\tde\tADP\t_\t_\t2\tcase\t_\t_\n2\tle\tle\tDET\t_\t_\t0\troot\t_\t_\n2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n\n1\tz\tz\tX\t_\t_\t0\troot\t_\t_\n";
        let out = parse_conllu_str(text, ParseOptions::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].id, "s1");
        assert_eq!(out[1].id, "s2");
        assert_eq!(out[0].tokens.len(), 2);
        assert_eq!(out[0].tokens[0].pos, "ADP");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "# sent_id = a\n1\tz\tz\tX\t_\t_\t0\troot\t_\t_\n\n# sent_id = a\n1\tz\tz\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(
            parse_conllu_str(text, ParseOptions::default()),
            Err(CorpusError::DuplicateId(_))
        ));
    }

    #[test]
    fn mentions_from_bio_runs() {
        let s = sent(vec![tok(0, "a", "B-PER", None), tok(1, "b", "O", Some(0)), tok(2, "c", "B-ORG", Some(0))]);
        let m = s.mentions();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].span, Span::new(0, 0));
        assert_eq!(m[1].span, Span::new(2, 2));
        assert_eq!(m[1].entity_type, "ORG");

        // token 1 heads token 0 and token 1's head is external
        let s = sent(vec![
            tok(0, "April", "B-DATE", Some(1)),
            tok(1, "1975", "I-DATE", Some(2)),
            tok(2, "in", "O", None),
        ]);
        let m = s.mentions();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].span, Span::new(0, 1));
        assert_eq!(m[0].head_token, 1);

        let s = sent(vec![tok(0, "a", "O", None), tok(1, "b", "O", Some(0))]);
        assert!(s.mentions().is_empty());
    }

    #[test]
    fn adjacent_mentions_of_different_types_split() {
        let s = sent(vec![
            tok(0, "a", "B-PER", None),
            tok(1, "b", "B-PER", Some(0)),
            tok(2, "c", "I-PER", Some(1)),
        ]);
        let spans: Vec<Span> = s.mentions().iter().map(|m| m.span).collect();
        assert_eq!(spans, vec![Span::new(0, 0), Span::new(1, 2)]);
    }

    #[test]
    fn snapshot_round_trip_and_header_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let s = sent(vec![tok(0, "a", "B-PER", None), tok(1, "b", "O", Some(0))]);
        save_corpus(std::slice::from_ref(&s), &path).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), vec![s]);

        save_corpus(&[], &path).unwrap();
        assert!(load_corpus(&path).unwrap().is_empty());

        std::fs::write(&path, "{\"format\":\"depsearch-corpus\",\"version\":99,\"count\":0}\n").unwrap();
        assert!(matches!(load_corpus(&path), Err(CorpusError::VersionMismatch(_))));
        std::fs::write(&path, "garbage\n").unwrap();
        assert!(matches!(load_corpus(&path), Err(CorpusError::VersionMismatch(_))));
    }
}
