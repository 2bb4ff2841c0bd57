//! Natural-language questions to pipelines: stored user corrections first,
//! then a keyword pattern grammar.

mod eval;
mod feedback;
mod grammar;

use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

pub use eval::{eval_metrics, EvalCase, EvalReport, Rate};
pub use feedback::{record_feedback, FeedbackRecord, FeedbackStore};
pub use grammar::{anchors, PatternId};

use crate::dataset::Table;
use crate::linearize::{linearize_query, LinearizedQuery};
use crate::qdmr::{Pipeline, ValidationError};

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "code", content = "detail")]
pub enum DecomposeError {
    #[error("no pattern recognizes the question {query:?}; write the pipeline by hand")]
    UnrecognizedQuery { query: String },
    #[error("the correction does not fit the table: {0:?}")]
    InvalidCorrection(Vec<ValidationError>),
    #[error("stored correction cannot be read: {0}")]
    MalformedRecord(String),
}

impl DecomposeError {
    pub fn code(&self) -> &'static str {
        match self {
            DecomposeError::UnrecognizedQuery { .. } => "UnrecognizedQuery",
            DecomposeError::InvalidCorrection(_) => "InvalidCorrection",
            DecomposeError::MalformedRecord(_) => "MalformedRecord",
        }
    }
}

/// Where a decomposition came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "pattern", rename_all = "snake_case")]
pub enum Origin {
    Feedback,
    Pattern(PatternId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub pipeline: Pipeline,
    pub origin: Origin,
}

/// Decomposes a linearized query, reporting which rule produced it.
pub fn decompose_explained(
    q: &LinearizedQuery,
    t: &Table,
    ledger: &FeedbackStore,
) -> Result<Decomposition, DecomposeError> {
    if let Some(p) = ledger.lookup(&q.query_key(), t.name()) {
        return Ok(Decomposition {
            pipeline: p.clone(),
            origin: Origin::Feedback,
        });
    }
    grammar::match_patterns(q, t)
        .map(|(id, pipeline)| Decomposition {
            pipeline,
            origin: Origin::Pattern(id),
        })
        .ok_or_else(|| DecomposeError::UnrecognizedQuery {
            query: q.words().join(" "),
        })
}

/// Maps a question over a table to a pipeline that validates against it.
pub fn decompose(q: &LinearizedQuery, t: &Table, ledger: &FeedbackStore) -> Result<Pipeline, DecomposeError> {
    decompose_explained(q, t, ledger).map(|d| d.pipeline)
}

/// Linearizes and decomposes raw question text.
pub fn decompose_text(query: &str, t: &Table, ledger: &FeedbackStore) -> Result<Pipeline, DecomposeError> {
    decompose(&linearize_query(query, t), t, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdmr::{parse_pipeline, validate_pipeline, Provenance};
    use alloc::string::ToString;

    fn students() -> Table {
        let header: Vec<String> = ["name", "birth_year", "major"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = [
            ["Ann", "2000", "CS"],
            ["Bob", "1999", "EE"],
            ["Cid", "2000", "CS"],
            ["Dee", "2001", "ME"],
            ["Eve", "2000", "EE"],
            ["Fay", "1998", "CS"],
        ]
        .iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect();
        Table::from_strings("students", &header, &rows, &Default::default()).unwrap()
    }

    #[test]
    fn counting_question() {
        let t = students();
        let p = decompose_text("how many students were born in 2000?", &t, &FeedbackStore::new()).unwrap();
        assert_eq!(
            p.to_script(),
            "#1 = SELECT(\"students\")\n#2 = PROJECT(\"birth_year\", #1)\n#3 = COMPARATIVE(#1, #2, \"= 2000\")\n#4 = AGGREGATE(count, #3)\n"
        );
        assert_eq!(p.provenance(), Provenance::Decomposed);
        assert!(validate_pipeline(&p, &t).is_ok());
    }

    #[test]
    fn unrecognized() {
        let err = decompose_text("tell me a joke", &students(), &FeedbackStore::new()).unwrap_err();
        assert_eq!(err.code(), "UnrecognizedQuery");
    }

    #[test]
    fn correction_overrides_only_its_query() {
        let t = students();
        let mut store = FeedbackStore::new();
        let q = "How many students were born in 2000?";
        let other = "how many students study CS";
        let before_other = decompose_text(other, &t, &store).unwrap();
        let original = decompose_text(q, &t, &store).unwrap();
        let corrected = parse_pipeline("#1 = SELECT(\"students\")\n#2 = AGGREGATE(count, #1)").unwrap();
        record_feedback(&mut store, q, &t, &original, &corrected, 1).unwrap();
        let again = decompose_text("how many students were born in 2000", &t, &store).unwrap();
        assert!(again.same_as(&corrected));
        assert_eq!(again.provenance(), Provenance::UserEdited);
        assert_eq!(decompose_text(other, &t, &store).unwrap(), before_other);
    }

    #[test]
    fn invalid_correction_leaves_store_unchanged() {
        let t = students();
        let mut store = FeedbackStore::new();
        let original = decompose_text("how many students", &t, &store).unwrap();
        let bad = parse_pipeline("#1 = SELECT(\"students\")\n#2 = PROJECT(\"height\", #1)").unwrap();
        let err = record_feedback(&mut store, "how many students", &t, &original, &bad, 1).unwrap_err();
        assert_eq!(err.code(), "InvalidCorrection");
        assert!(store.is_empty());
    }

    #[test]
    fn recording_twice_is_recording_once() {
        let t = students();
        let mut once = FeedbackStore::new();
        let p = decompose_text("how many students", &t, &once).unwrap();
        record_feedback(&mut once, "how many students", &t, &p, &p, 5).unwrap();
        let mut twice = once.clone();
        record_feedback(&mut twice, "how many students", &t, &p, &p, 9).unwrap();
        assert_eq!(once, twice);
    }
}
