//! Editing sessions: an append-only log of pipeline edits over one dataset.

use datamation_core::qdmr::{parse_op, DependencyGraph, ParseError, Provenance, StepRef, ValidationError};
use datamation_core::{parse_pipeline, validate_pipeline, Pipeline, QdmrOp, Table};
use serde::{Deserialize, Serialize};

/// One change to a session's pipeline. Steps and positions are one-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "edit", content = "payload", rename_all = "snake_case")]
pub enum Edit {
    /// Replaces the whole pipeline.
    Set {
        script: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        query: Option<String>,
        #[serde(default)]
        provenance: Provenance,
    },
    /// Moves steps so that new step `k` is old step `order[k - 1]`.
    Reorder { order: Vec<usize> },
    /// Replaces one step with an operator expression such as `SORT(#2, "year", desc)`.
    ModifyOp { step: usize, op: String },
    /// Inserts an operator so that it becomes step `at`; later references shift up.
    InsertOp { at: usize, op: String },
    /// Removes a step no other step reads; later references shift down.
    DeleteOp { step: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EditError {
    #[error("the session has no pipeline yet")]
    NoPipeline,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("step {step} is out of range for a pipeline of {len} steps")]
    StepOutOfRange { step: usize, len: usize },
    #[error("order {order:?} is not a permutation of the steps")]
    InvalidOrder { order: Vec<usize> },
    #[error("in order {order:?} a step no longer reads the step before it or reads a later step")]
    NoContinuousOrder { order: Vec<usize>, steps: Vec<usize> },
    #[error("step {step} is read by steps {readers:?}")]
    StepInUse { step: usize, readers: Vec<usize> },
    #[error("the edited pipeline does not fit the table")]
    Validation(Vec<ValidationError>),
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::NoPipeline => "NoPipeline",
            EditError::Parse(e) => e.code(),
            EditError::StepOutOfRange { .. } => "StepOutOfRange",
            EditError::InvalidOrder { .. } => "InvalidOrder",
            EditError::NoContinuousOrder { .. } => "NoContinuousOrder",
            EditError::StepInUse { .. } => "StepInUse",
            EditError::Validation(errors) => errors.first().map_or("Validation", |e| e.kind.code()),
        }
    }

    /// One-based steps the error points at.
    pub fn steps(&self) -> Vec<usize> {
        match self {
            EditError::Parse(e) => e.line().into_iter().collect(),
            EditError::StepOutOfRange { step, .. } | EditError::StepInUse { step, .. } => vec![*step],
            EditError::NoContinuousOrder { steps, .. } => steps.clone(),
            EditError::Validation(errors) => errors.iter().map(|e| e.step).collect(),
            _ => Vec::new(),
        }
    }
}

fn in_range(step: usize, len: usize) -> Result<usize, EditError> {
    if step == 0 || step > len {
        Err(EditError::StepOutOfRange { step, len })
    } else {
        Ok(step - 1)
    }
}

fn edited(steps: Vec<QdmrOp>) -> Result<Pipeline, EditError> {
    Ok(Pipeline::new(steps, Provenance::UserEdited)?)
}

/// Applies one edit to an optional current pipeline, checking the result
/// against the table.
pub fn apply_edit(current: Option<&Pipeline>, edit: &Edit, table: &Table) -> Result<Pipeline, EditError> {
    let next = match edit {
        Edit::Set { script, provenance, .. } => parse_pipeline(script)?.with_provenance(*provenance),
        other => {
            let p = current.ok_or(EditError::NoPipeline)?;
            apply_step_edit(p, other)?
        }
    };
    validate_pipeline(&next, table).map_err(EditError::Validation)?;
    Ok(next)
}

fn apply_step_edit(p: &Pipeline, edit: &Edit) -> Result<Pipeline, EditError> {
    let steps = p.steps();
    let len = steps.len();
    match edit {
        Edit::Set { .. } => unreachable!("handled by apply_edit"),
        Edit::Reorder { order } => {
            let mut seen = vec![false; len];
            let valid = order.len() == len
                && order.iter().all(|&s| s >= 1 && s <= len && !std::mem::replace(&mut seen[s - 1], true));
            if !valid {
                return Err(EditError::InvalidOrder { order: order.clone() });
            }
            let mut position = vec![0; len];
            for (new, old) in order.iter().enumerate() {
                position[old - 1] = new + 1;
            }
            let moved: Vec<QdmrOp> = order
                .iter()
                .map(|old| steps[old - 1].map_refs(|r| StepRef(position[r.index()])))
                .collect();
            let forward: Vec<usize> = moved
                .iter()
                .enumerate()
                .filter(|(i, op)| op.refs().iter().any(|r| r.0 > *i))
                .map(|(i, _)| i + 1)
                .collect();
            let steps = if forward.is_empty() { broken_links(&moved) } else { forward };
            if !steps.is_empty() {
                return Err(EditError::NoContinuousOrder {
                    order: order.clone(),
                    steps,
                });
            }
            edited(moved)
        }
        Edit::ModifyOp { step, op } => {
            let i = in_range(*step, len)?;
            let mut next = steps.to_vec();
            next[i] = parse_op(op)?;
            edited(next)
        }
        Edit::InsertOp { at, op } => {
            let i = in_range(*at, len + 1)?;
            let shift = |r: StepRef| if r.0 > i { StepRef(r.0 + 1) } else { r };
            let mut next: Vec<QdmrOp> = steps.iter().map(|s| s.map_refs(shift)).collect();
            next.insert(i, parse_op(op)?);
            edited(next)
        }
        Edit::DeleteOp { step } => {
            let i = in_range(*step, len)?;
            let readers = DependencyGraph::of_steps(steps).successors(*step);
            if !readers.is_empty() {
                return Err(EditError::StepInUse { step: *step, readers });
            }
            let shift = |r: StepRef| if r.0 > *step { StepRef(r.0 - 1) } else { r };
            let next: Vec<QdmrOp> = steps
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, s)| s.map_refs(shift))
                .collect();
            edited(next)
        }
    }
}

fn broken_links(steps: &[QdmrOp]) -> Vec<usize> {
    steps
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(i, op)| !op.refs().iter().any(|r| r.0 == *i))
        .map(|(i, _)| i + 1)
        .collect()
}

/// A dataset, its edit log and the pipeline the log produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub dataset_id: String,
    history: Vec<Edit>,
    #[serde(skip)]
    pipeline: Option<Pipeline>,
}

impl Session {
    pub fn new(id: &str, dataset_id: &str) -> Session {
        Session {
            id: id.to_string(),
            dataset_id: dataset_id.to_string(),
            history: Vec::new(),
            pipeline: None,
        }
    }

    /// Rebuilds a session by folding its edit log over the table.
    pub fn replay(id: &str, dataset_id: &str, history: &[Edit], table: &Table) -> Result<Session, EditError> {
        let mut s = Session::new(id, dataset_id);
        for edit in history {
            s.apply(edit.clone(), table)?;
        }
        Ok(s)
    }

    /// Number of edits applied so far.
    pub fn version(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[Edit] {
        &self.history
    }

    pub fn pipeline(&self) -> Option<&Pipeline> {
        self.pipeline.as_ref()
    }

    /// The question behind the current pipeline, if the last full
    /// replacement carried one.
    pub fn query(&self) -> Option<&str> {
        self.history.iter().rev().find_map(|e| match e {
            Edit::Set { query, .. } => Some(query.as_deref()),
            _ => None,
        })?
    }

    /// The pipeline an edit would produce, without applying it.
    pub fn preview(&self, edit: &Edit, table: &Table) -> Result<Pipeline, EditError> {
        apply_edit(self.pipeline.as_ref(), edit, table)
    }

    /// Appends an edit when it succeeds; a failed edit changes nothing.
    pub fn apply(&mut self, edit: Edit, table: &Table) -> Result<&Pipeline, EditError> {
        let next = self.preview(&edit, table)?;
        self.commit(edit, next);
        Ok(self.pipeline.as_ref().expect("just set"))
    }

    /// Appends an edit whose result was already computed by `preview`.
    pub fn commit(&mut self, edit: Edit, pipeline: Pipeline) {
        self.history.push(edit);
        self.pipeline = Some(pipeline);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn table() -> Table {
        let csv = "name,birth_year,major\nAlice,1999,CS\nBob,2000,EE\nCarol,2000,CS\n";
        crate::csv_io::read_table(csv.as_bytes(), "students", &BTreeMap::new()).unwrap()
    }

    const STUDENTS_COUNT: &str = "#1 = SELECT(\"students\")\n#2 = PROJECT(\"birth_year\", #1)\n#3 = COMPARATIVE(#1, #2, \"= 2000\")\n#4 = AGGREGATE(count, #3)\n";

    fn set(script: &str) -> Edit {
        Edit::Set {
            script: script.to_string(),
            query: None,
            provenance: Provenance::UserEdited,
        }
    }

    #[test]
    fn failed_edit_leaves_log_untouched() {
        let t = table();
        let mut s = Session::new("s", "d");
        s.apply(set(STUDENTS_COUNT), &t).unwrap();
        let err = s.apply(Edit::DeleteOp { step: 2 }, &t).unwrap_err();
        assert_eq!(err.code(), "StepInUse");
        assert_eq!(s.version(), 1);
    }

    #[test]
    fn reorder_that_breaks_continuity_is_refused() {
        let t = table();
        let mut s = Session::new("s", "d");
        s.apply(set(STUDENTS_COUNT), &t).unwrap();
        let err = s.apply(Edit::Reorder { order: vec![1, 3, 2, 4] }, &t).unwrap_err();
        assert_eq!(err.code(), "NoContinuousOrder");
        let err = s.apply(Edit::Reorder { order: vec![1, 2, 2, 4] }, &t).unwrap_err();
        assert_eq!(err.code(), "InvalidOrder");
        s.apply(Edit::Reorder { order: vec![1, 2, 3, 4] }, &t).unwrap();
        assert_eq!(s.pipeline().unwrap().to_script(), STUDENTS_COUNT);
    }

    #[test]
    fn insert_modify_delete_renumber() {
        let t = table();
        let mut s = Session::new("s", "d");
        s.apply(set(STUDENTS_COUNT), &t).unwrap();
        s.apply(
            Edit::InsertOp {
                at: 4,
                op: "SORT(#3, \"name\", asc)".into(),
            },
            &t,
        )
        .unwrap();
        assert_eq!(s.pipeline().unwrap().steps()[4].to_string(), "AGGREGATE(count, #3)");
        s.apply(
            Edit::ModifyOp {
                step: 5,
                op: "AGGREGATE(count, #4)".into(),
            },
            &t,
        )
        .unwrap();
        let err = s.apply(Edit::DeleteOp { step: 4 }, &t).unwrap_err();
        assert_eq!(err.steps(), [4]);
        s.apply(Edit::DeleteOp { step: 5 }, &t).unwrap();
        assert_eq!(s.pipeline().unwrap().len(), 4);
        assert_eq!(s.pipeline().unwrap().provenance(), Provenance::UserEdited);
    }

    #[test]
    fn modify_to_unknown_column_is_a_validation_error() {
        let t = table();
        let mut s = Session::new("s", "d");
        s.apply(set(STUDENTS_COUNT), &t).unwrap();
        let err = s
            .apply(
                Edit::ModifyOp {
                    step: 2,
                    op: "PROJECT(\"height\", #1)".into(),
                },
                &t,
            )
            .unwrap_err();
        assert_eq!((err.code(), err.steps()), ("UnknownColumn", vec![2]));
    }

    #[test]
    fn edits_without_pipeline_fail() {
        let t = table();
        let s = Session::new("s", "d");
        assert_eq!(s.preview(&Edit::DeleteOp { step: 1 }, &t).unwrap_err(), EditError::NoPipeline);
    }

    #[test]
    fn replay_reproduces_pipeline() {
        let t = table();
        let mut s = Session::new("s", "d");
        s.apply(set(STUDENTS_COUNT), &t).unwrap();
        s.apply(
            Edit::ModifyOp {
                step: 3,
                op: "COMPARATIVE(#1, #2, \"> 1999\")".into(),
            },
            &t,
        )
        .unwrap();
        let again = Session::replay("s", "d", s.history(), &t).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn edit_wire_format() {
        let e: Edit = serde_json::from_str(r#"{"edit":"reorder","payload":{"order":[2,1]}}"#).unwrap();
        assert_eq!(e, Edit::Reorder { order: vec![2, 1] });
        let e: Edit = serde_json::from_str(r#"{"edit":"delete_op","payload":{"step":3}}"#).unwrap();
        assert_eq!(e, Edit::DeleteOp { step: 3 });
    }
}
