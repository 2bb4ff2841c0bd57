//! From an executed pipeline to keyframes: reordering for data-flow
//! continuity, operator-to-action translation, captions and per-step scenes.

mod action;
mod caption;
mod reorder;
mod scene;
mod translate;

use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

pub use action::{actions_are_ordered, Action, ActionFamily, ActionKind, ActionParams, Note, Warning};
pub use caption::{caption_op, MAX_CAPTION_CHARS};
pub use reorder::{reorder, reorder_steps, ReorderError};
pub use translate::{translate_op, GroupAxisPolicy, TranslateContext, Translation, MAX_X_GROUPS};

use crate::dataset::Table;
use crate::doc::{DatamationDoc, DatasetInfo, DocProvenance, DocStep, ResultSummary};
use crate::exec::{execute_pipeline, ExecError, StepValue};
use crate::layout::{plan_transition, Keyframe, Timing, TransitionPlan, DEFAULT_CELL};
use crate::qdmr::{validate_pipeline, Pipeline, QdmrOp, ValidationError};
use scene::Scene;

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub group_axis: GroupAxisPolicy,
    pub cell: f64,
    pub timing: Timing,
    /// The question the pipeline answers, when known.
    pub query: Option<String>,
    /// Creation time in milliseconds since the epoch, when known.
    pub created_ms: Option<u64>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            group_axis: GroupAxisPolicy::default(),
            cell: DEFAULT_CELL,
            timing: Timing::default(),
            query: None,
            created_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
#[serde(tag = "stage", content = "detail", rename_all = "snake_case")]
pub enum CompileError {
    #[error("pipeline does not fit the table: {}", list(.0))]
    Validation(Vec<ValidationError>),
    #[error("{0}")]
    Reorder(ReorderError),
    #[error("{0}")]
    Exec(ExecError),
}

fn list(errors: &[ValidationError]) -> String {
    let parts: Vec<String> = errors.iter().map(|e| alloc::format!("{e}")).collect();
    parts.join("; ")
}

impl CompileError {
    pub fn code(&self) -> &'static str {
        match self {
            CompileError::Validation(errors) => errors.first().map_or("Validation", |e| e.kind.code()),
            CompileError::Reorder(e) => e.code(),
            CompileError::Exec(e) => e.kind.code(),
        }
    }

    /// One-based steps the error points at.
    pub fn steps(&self) -> Vec<usize> {
        match self {
            CompileError::Validation(errors) => errors.iter().map(|e| e.step).collect(),
            CompileError::Reorder(ReorderError::Cycle { steps }) => steps.clone(),
            CompileError::Reorder(_) => Vec::new(),
            CompileError::Exec(e) => alloc::vec![e.step],
        }
    }
}

/// One operator with its result, actions, caption and keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledStep {
    pub op: QdmrOp,
    pub value: StepValue,
    pub actions: Vec<Action>,
    pub caption: String,
    pub keyframe: Keyframe,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    /// The pipeline after reordering.
    pub pipeline: Pipeline,
    pub steps: Vec<CompiledStep>,
    pub transitions: Vec<TransitionPlan>,
}

/// Validates, reorders, executes and lays out a pipeline.
pub fn compile_steps(p: &Pipeline, t: &Table, opts: &CompileOptions) -> Result<Compiled, CompileError> {
    validate_pipeline(p, t).map_err(CompileError::Validation)?;
    let pipeline = reorder(p).map_err(CompileError::Reorder)?;
    let values = execute_pipeline(&pipeline, t).map_err(CompileError::Exec)?;

    let mut scene = Scene::new(t, opts.cell);
    let mut steps: Vec<CompiledStep> = Vec::with_capacity(values.len());
    for (i, op) in pipeline.steps().iter().enumerate() {
        let ctx = TranslateContext {
            table: t,
            values: &values,
            index: i,
            x_bound: scene.x_attribute(),
            policy: opts.group_axis,
        };
        let Translation {
            actions,
            mut warnings,
        } = translate_op(op, &ctx);
        let caption = caption_op(op, &values[i], &ctx);
        let keyframe = scene.frame(i + 1, op.kind(), &values[i], &actions, caption.clone(), &mut warnings);
        steps.push(CompiledStep {
            op: op.clone(),
            value: values[i].clone(),
            actions,
            caption,
            keyframe,
            warnings,
        });
    }
    let transitions = steps
        .windows(2)
        .map(|w| plan_transition(&w[0].keyframe, &w[1].keyframe, &w[1].actions, &opts.timing))
        .collect();
    Ok(Compiled {
        pipeline,
        steps,
        transitions,
    })
}

/// Compiles a pipeline into the document the editor plays back.
pub fn compile_datamation(p: &Pipeline, t: &Table, opts: &CompileOptions) -> Result<DatamationDoc, CompileError> {
    let compiled = compile_steps(p, t, opts)?;
    Ok(DatamationDoc {
        version: String::from(crate::doc::DOC_VERSION),
        dataset: DatasetInfo {
            name: String::from(t.name()),
            columns: t.columns().to_vec(),
            row_count: t.row_count(),
        },
        pipeline: compiled.pipeline.to_script(),
        steps: compiled
            .steps
            .into_iter()
            .enumerate()
            .map(|(i, s)| DocStep {
                index: i + 1,
                op: s.op.kind(),
                result: ResultSummary::of(&s.value),
                args: s.op,
                caption: s.caption,
                actions: s.actions,
                keyframe: s.keyframe,
                warnings: s.warnings,
            })
            .collect(),
        transitions: compiled.transitions,
        timing: opts.timing,
        provenance: DocProvenance {
            query: opts.query.clone(),
            source: p.provenance(),
            created_ms: opts.created_ms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::transition_conserves_units;
    use crate::qdmr::parse_pipeline;
    use crate::dataset::ColumnKind;
    use alloc::string::ToString;

    fn students() -> Table {
        let header: Vec<String> = ["name", "birth_year", "major", "gpa"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = [
            ["Ann", "2000", "CS", "3.5"],
            ["Bob", "1999", "EE", "3.1"],
            ["Cid", "2000", "CS", "3.9"],
            ["Dee", "2001", "ME", "2.8"],
            ["Eve", "2000", "EE", "3.3"],
            ["Fay", "1998", "CS", "3.7"],
        ]
        .iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect();
        let kinds = [("name".to_string(), ColumnKind::Text)].into_iter().collect();
        Table::from_strings("students", &header, &rows, &kinds).unwrap()
    }

    const STUDENTS_COUNT: &str = "#1 = SELECT(\"students\")\n#2 = PROJECT(\"birth_year\", #1)\n#3 = COMPARATIVE(#1, #2, \"= 2000\")\n#4 = AGGREGATE(count, #3)";

    #[test]
    fn counting_question_compiles_to_four_frames() {
        let t = students();
        let c = compile_steps(&parse_pipeline(STUDENTS_COUNT).unwrap(), &t, &CompileOptions::default()).unwrap();
        assert_eq!(c.steps.len(), 4);
        assert_eq!(c.transitions.len(), 3);
        assert_eq!(c.steps[3].value.scalar(), Some(3.0));
        assert_eq!(c.steps[3].keyframe.annotations[0].text, "count: 3");
        assert_eq!(c.steps[3].keyframe.visible_ids().len(), 3);
        assert_eq!(c.steps[1].keyframe.axes[0].ticks.len(), 4);
        for (i, tr) in c.transitions.iter().enumerate() {
            assert!(transition_conserves_units(&c.steps[i].keyframe, &c.steps[i + 1].keyframe, tr));
        }
        let x_stage = &c.transitions[0].stages[0];
        assert_eq!(x_stage.action, ActionKind::XAxis);
        assert_eq!(x_stage.units.len(), 6);
    }

    #[test]
    fn empty_filter_counts_zero() {
        let t = students();
        let p = parse_pipeline(
            "#1 = SELECT(\"students\")\n#2 = COMPARATIVE(#1, \"birth_year\", \"= 1900\")\n#3 = AGGREGATE(count, #2)",
        )
        .unwrap();
        let c = compile_steps(&p, &t, &CompileOptions::default()).unwrap();
        assert!(c.steps[1].keyframe.visible_ids().is_empty());
        assert_eq!(c.steps[2].keyframe.annotations[0].text, "count: 0");
    }

    #[test]
    fn later_projection_takes_the_channel() {
        let t = students();
        let p = parse_pipeline(
            "#1 = SELECT(\"students\")\n#2 = PROJECT(\"gpa\", #1)\n#3 = PROJECT(\"birth_year\", #2)\n#4 = PROJECT(\"gpa\", #3)",
        )
        .unwrap();
        let c = compile_steps(&p, &t, &CompileOptions::default()).unwrap();
        assert!(c.steps[3].warnings.is_empty());
        let p = parse_pipeline(
            "#1 = SELECT(\"students\")\n#2 = PROJECT(\"major\", #1)\n#3 = GROUP(count, #2, \"major\")\n#4 = PROJECT(\"name\", #3)",
        )
        .unwrap();
        let c = compile_steps(&p, &t, &CompileOptions::default()).unwrap();
        assert_eq!(c.steps[3].warnings[0].code, "UnencodableAttribute");
    }

    #[test]
    fn validation_errors_carry_steps() {
        let t = students();
        let p = parse_pipeline("#1 = SELECT(\"students\")\n#2 = PROJECT(\"height\", #1)").unwrap();
        let err = compile_steps(&p, &t, &CompileOptions::default()).unwrap_err();
        assert_eq!(err.code(), "UnknownColumn");
        assert_eq!(err.steps(), [2]);
    }
}
