//! By-example syntactic search over dependency-parsed corpora.
//!
//! Example sentences with light markup are compiled into tree patterns
//! ([`patterns`]), matched against an inverted-indexed corpus ([`engine`]),
//! and the hits are assembled into relation-extraction training data
//! ([`bootstrap`]) or used directly as a rule-based extractor
//! ([`extractor`]).

pub mod bootstrap;
pub mod corpus;
pub mod engine;
pub mod extractor;
pub mod par;
pub mod patterns;
pub mod querylang;
pub mod sampling;
pub mod synth;

pub use corpus::{Corpus, Mention, Sentence, Span, Token};
pub use engine::{CorpusIndex, Match, SearchPage};
pub use par::Execution;
pub use patterns::{Pattern, PatternEdge, PatternNode};
pub use querylang::{parse_query, QueryExample};
