use std::fmt;
use std::path::Path;

use depsearch::bootstrap::BootstrapError;
use depsearch::corpus::CorpusError;
use depsearch::engine::IndexError;
use depsearch::extractor::ExtractorError;
use depsearch::patterns::PatternError;
use depsearch::querylang::{QueryError, QueryFileError};
use serde_json::{json, Value};

/// An error with an HTTP status and a machine-readable kind. The CLI prints
/// the same JSON body to stderr.
#[derive(Debug)]
pub struct AppError {
    pub status: u16,
    pub kind: &'static str,
    pub message: String,
    pub offset: Option<usize>,
    pub detail: Option<Value>,
}

impl AppError {
    pub fn new(status: u16, kind: &'static str, message: impl Into<String>) -> Self {
        AppError { status, kind, message: message.into(), offset: None, detail: None }
    }

    pub fn bad_request(kind: &'static str, message: impl Into<String>) -> Self {
        Self::new(400, kind, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "not_found", message)
    }

    pub fn conflict(kind: &'static str, message: impl Into<String>) -> Self {
        Self::new(409, kind, message)
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(500, "io", format!("{}: {e}", path.display()))
    }

    pub fn body(&self) -> Value {
        let mut err = json!({ "kind": self.kind, "message": self.message });
        if let Some(o) = self.offset {
            err["offset"] = json!(o);
        }
        if let Some(d) = &self.detail {
            err["detail"] = d.clone();
        }
        json!({ "error": err })
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<QueryError> for AppError {
    fn from(e: QueryError) -> Self {
        AppError { offset: e.offset(), ..Self::bad_request("query_syntax", e.to_string()) }
    }
}

impl From<QueryFileError> for AppError {
    fn from(e: QueryFileError) -> Self {
        let mut err = AppError::from(e.source);
        err.detail = Some(json!({ "line": e.line }));
        err
    }
}

impl From<PatternError> for AppError {
    fn from(e: PatternError) -> Self {
        match e {
            PatternError::Query(q) => q.into(),
            PatternError::Io(e) => Self::new(500, "io", e.to_string()),
            other => Self::bad_request("compile", other.to_string()),
        }
    }
}

impl From<CorpusError> for AppError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io(e) => Self::new(500, "io", e.to_string()),
            other => Self::bad_request("corpus", other.to_string()),
        }
    }
}

impl From<IndexError> for AppError {
    fn from(e: IndexError) -> Self {
        Self::new(500, "index", e.to_string())
    }
}

impl From<BootstrapError> for AppError {
    fn from(e: BootstrapError) -> Self {
        match &e {
            BootstrapError::Pending(ids) => {
                Self::conflict("pending_verdicts", e.to_string()).with_detail(json!({ "pending": ids }))
            }
            BootstrapError::UnknownPattern(_) => Self::not_found(e.to_string()),
            BootstrapError::Io(_) => Self::new(500, "io", e.to_string()),
            _ => Self::bad_request("dataset", e.to_string()),
        }
    }
}

impl From<ExtractorError> for AppError {
    fn from(e: ExtractorError) -> Self {
        Self::bad_request("eval", e.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(e: serde_json::Error) -> Self {
        Self::bad_request("json", e.to_string())
    }
}
