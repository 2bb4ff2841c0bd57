//! Exact-match, success and retain rates over a labelled query corpus.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{decompose_text, record_feedback, FeedbackStore};
use crate::dataset::Table;
use crate::qdmr::Pipeline;

/// A hit count over a total. An empty total reads as 1.0 and is flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rate {
    pub hits: usize,
    pub total: usize,
}

impl Rate {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.total == 0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalCase<'a> {
    pub query: &'a str,
    pub table: &'a Table,
    pub gold: &'a Pipeline,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub cases: usize,
    /// Decompositions equal to gold before any correction.
    pub exact_match: Rate,
    /// Initially wrong cases that are right after their corrections.
    pub success: Rate,
    /// Initially right cases that stay right after all corrections.
    pub retain: Rate,
    /// Indices of the initially wrong cases.
    pub failing: Vec<usize>,
}

fn matches(case: &EvalCase<'_>, store: &FeedbackStore) -> bool {
    decompose_text(case.query, case.table, store).is_ok_and(|p| p.same_as(case.gold))
}

/// Scores the decomposer, then corrects every wrong case with its gold
/// pipeline and scores again.
pub fn eval_metrics(cases: &[EvalCase<'_>], ledger: &FeedbackStore) -> EvalReport {
    let first: Vec<bool> = cases.iter().map(|c| matches(c, ledger)).collect();
    let mut corrected = ledger.clone();
    for (case, ok) in cases.iter().zip(&first) {
        if !ok {
            let original = decompose_text(case.query, case.table, ledger).unwrap_or_else(|_| case.gold.clone());
            // A gold pipeline that fails validation is not recorded.
            let _ = record_feedback(&mut corrected, case.query, case.table, &original, case.gold, 0);
        }
    }
    let second: Vec<bool> = cases.iter().map(|c| matches(c, &corrected)).collect();
    let count = |pick: bool| {
        let hits = first
            .iter()
            .zip(&second)
            .filter(|(f, s)| **f == pick && **s)
            .count();
        Rate {
            hits,
            total: first.iter().filter(|f| **f == pick).count(),
        }
    };
    EvalReport {
        cases: cases.len(),
        exact_match: Rate {
            hits: first.iter().filter(|f| **f).count(),
            total: cases.len(),
        },
        success: count(false),
        retain: count(true),
        failing: first.iter().enumerate().filter(|(_, f)| !**f).map(|(i, _)| i).collect(),
    }
}
