//! Patterns used directly as a rule-based relation classifier.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bootstrap::Label;
use crate::corpus::{self, CorpusError, ParseOptions, Sentence, Span};
use crate::engine::{self, PreparedSentence};
use crate::par::Execution;
use crate::patterns::Pattern;

#[derive(Debug, Error)]
pub enum ExtractorError {
    #[error("gold set is empty")]
    EmptyGold,
    #[error("instance {0} has no parse")]
    MissingParse(String),
    #[error("instance {id}: {message}")]
    BadInstance { id: String, message: String },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// A labelled argument pair with the parse of its sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldInstance {
    pub id: String,
    pub relation: String,
    pub label: Label,
    pub tokens: Vec<String>,
    pub e1: Span,
    pub e2: Span,
    /// Inline CoNLL-U for one sentence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conllu: Option<String>,
    #[serde(skip)]
    pub parse: Option<Sentence>,
}

impl GoldInstance {
    pub fn from_sentence(id: impl Into<String>, relation: &str, label: Label, sentence: Sentence, e1: Span, e2: Span) -> Self {
        GoldInstance {
            id: id.into(),
            relation: relation.to_string(),
            label,
            tokens: sentence.tokens.iter().map(|t| t.word.clone()).collect(),
            e1,
            e2,
            conllu: None,
            parse: Some(sentence),
        }
    }

    /// Parses the inline CoNLL-U if the instance has no parse yet.
    fn resolve_parse(&mut self) -> Result<(), ExtractorError> {
        if self.parse.is_some() {
            return Ok(());
        }
        if let Some(text) = &self.conllu {
            let mut sentences = corpus::parse_conllu_str(text, ParseOptions::default())?;
            if sentences.len() != 1 {
                return Err(self.bad(format!("inline parse holds {} sentences", sentences.len())));
            }
            self.parse = sentences.pop();
        }
        Ok(())
    }

    fn bad(&self, message: String) -> ExtractorError {
        ExtractorError::BadInstance { id: self.id.clone(), message }
    }
}

/// Reads gold instances, one JSON object per line. Parses come from the
/// inline `conllu` field or, failing that, from `parses` keyed by
/// sentence id equal to the instance id.
pub fn load_gold(jsonl: &str, parses: &[Sentence]) -> Result<Vec<GoldInstance>, ExtractorError> {
    let by_id: BTreeMap<&str, &Sentence> = parses.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut out = Vec::new();
    for (i, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut inst: GoldInstance =
            serde_json::from_str(line).map_err(|source| ExtractorError::Json { line: i + 1, source })?;
        inst.resolve_parse()?;
        if inst.parse.is_none() {
            inst.parse = by_id.get(inst.id.as_str()).map(|s| (*s).clone());
        }
        if let Some(p) = &inst.parse {
            if p.tokens.len() != inst.tokens.len() {
                return Err(inst.bad(format!("{} tokens but parse has {}", inst.tokens.len(), p.tokens.len())));
            }
            p.validate().map_err(|e| inst.bad(e.to_string()))?;
        }
        out.push(inst);
    }
    Ok(out)
}

/// Indices of the patterns with a match binding exactly `(e1, e2)`.
pub fn fired_patterns(patterns: &[Pattern], instance: &GoldInstance) -> Result<Vec<usize>, ExtractorError> {
    let parse = instance
        .parse
        .as_ref()
        .ok_or_else(|| ExtractorError::MissingParse(instance.id.clone()))?;
    let prep = PreparedSentence::new(parse);
    Ok(patterns
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            engine::match_prepared(p, parse, &prep)
                .iter()
                .any(|m| m.e1() == Some(instance.e1) && m.e2() == Some(instance.e2))
        })
        .map(|(i, _)| i)
        .collect())
}

/// Positive iff some pattern binds e1 and e2 to exactly the gold spans.
pub fn classify(patterns: &[Pattern], instance: &GoldInstance) -> Result<bool, ExtractorError> {
    Ok(!fired_patterns(patterns, instance)?.is_empty())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Instances each pattern fired on, by pattern id.
    pub per_pattern: BTreeMap<String, usize>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 of the pattern set over `gold`. Empty
/// denominators give 0.
pub fn evaluate(patterns: &[Pattern], gold: &[GoldInstance], exec: Execution) -> Result<EvalReport, ExtractorError> {
    if gold.is_empty() {
        return Err(ExtractorError::EmptyGold);
    }
    let fired = exec
        .map(gold, |inst| fired_patterns(patterns, inst))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut r = EvalReport {
        per_pattern: patterns.iter().map(|p| (p.id.clone(), 0)).collect(),
        ..EvalReport::default()
    };
    for (inst, hits) in gold.iter().zip(&fired) {
        for &i in hits {
            *r.per_pattern.get_mut(&patterns[i].id).unwrap() += 1;
        }
        match (inst.label, !hits.is_empty()) {
            (Label::Positive, true) => r.tp += 1,
            (Label::Positive, false) => r.fn_ += 1,
            (Label::Negative, true) => r.fp += 1,
            (Label::Negative, false) => r.tn += 1,
        }
    }
    r.precision = ratio(r.tp, r.tp + r.fp);
    r.recall = ratio(r.tp, r.tp + r.fn_);
    r.f1 = if r.precision + r.recall > 0.0 {
        2.0 * r.precision * r.recall / (r.precision + r.recall)
    } else {
        0.0
    };
    Ok(r)
}

impl EvalReport {
    /// Plain-text summary for the console.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "tp {:>6}  fp {:>6}", self.tp, self.fp);
        let _ = writeln!(s, "fn {:>6}  tn {:>6}", self.fn_, self.tn);
        let _ = writeln!(s, "precision {:.4}", self.precision);
        let _ = writeln!(s, "recall    {:.4}", self.recall);
        let _ = writeln!(s, "f1        {:.4}", self.f1);
        if !self.per_pattern.is_empty() {
            let width = self.per_pattern.keys().map(String::len).max().unwrap_or(0);
            let _ = writeln!(s, "fires per pattern:");
            for (id, n) in &self.per_pattern {
                let _ = writeln!(s, "  {id:<width$}  {n}");
            }
        }
        s
    }
}
