//! The compiled document handed to renderers.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::compile::{Action, Warning};
use crate::dataset::Column;
use crate::exec::StepValue;
use crate::layout::{Keyframe, Timing, TransitionPlan};
use crate::qdmr::{OpKind, Provenance, QdmrOp};

pub const DOC_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub columns: Vec<Column>,
    pub row_count: usize,
}

/// Shape of a step result without the row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub variant: String,
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<f64>,
}

impl ResultSummary {
    pub fn of(value: &StepValue) -> ResultSummary {
        ResultSummary {
            variant: String::from(value.variant_name()),
            rows: value.rows().len(),
            value: value.scalar(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocStep {
    pub index: usize,
    pub op: OpKind,
    pub args: QdmrOp,
    pub caption: String,
    pub actions: Vec<Action>,
    pub keyframe: Keyframe,
    pub result: ResultSummary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocProvenance {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub query: Option<String>,
    pub source: Provenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub created_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatamationDoc {
    pub version: String,
    pub dataset: DatasetInfo,
    /// The pipeline script after reordering.
    pub pipeline: String,
    pub steps: Vec<DocStep>,
    pub transitions: Vec<TransitionPlan>,
    pub timing: Timing,
    pub provenance: DocProvenance,
}

impl DatamationDoc {
    pub fn keyframes(&self) -> impl Iterator<Item = &Keyframe> {
        self.steps.iter().map(|s| &s.keyframe)
    }

    pub fn captions(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.caption.as_str()).collect()
    }
}
