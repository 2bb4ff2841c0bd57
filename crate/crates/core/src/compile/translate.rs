use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::action::{Action, ActionKind, ActionParams, Note, Warning};
use crate::dataset::{Cell, ColumnKind, RowId, Table};
use crate::exec::StepValue;
use crate::qdmr::{AggMethod, Attribute, QdmrOp};
use crate::text::format_number;

/// Largest number of groups placed along x when a categorical key groups.
pub const MAX_X_GROUPS: usize = 8;

/// Where GROUP places a categorical key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupAxisPolicy {
    /// x when there are at most eight groups and x is free, else y.
    #[default]
    Adaptive,
    /// Always y for categorical keys.
    TableDefault,
}

/// What translation and captioning may look at besides the operator.
#[derive(Debug, Clone, Copy)]
pub struct TranslateContext<'a> {
    pub table: &'a Table,
    /// Values of every step up to and including the one being translated.
    pub values: &'a [StepValue],
    /// Zero-based position of the step being translated.
    pub index: usize,
    /// Attribute currently bound to the x channel.
    pub x_bound: Option<&'a str>,
    pub policy: GroupAxisPolicy,
}

impl<'a> TranslateContext<'a> {
    pub fn value(&self) -> &'a StepValue {
        &self.values[self.index]
    }

    /// Rows visible before this step.
    pub fn previous_rows(&self) -> &'a [RowId] {
        match self.index {
            0 => &[],
            i => self.values[i - 1].rows(),
        }
    }

    pub fn kind_of(&self, column: &str) -> Option<ColumnKind> {
        self.table.column(column).map(|c| c.kind)
    }

    /// Display name of an attribute argument.
    pub fn attribute_name(&self, attribute: &Attribute) -> String {
        match attribute {
            Attribute::Column(c) => c.clone(),
            Attribute::Step(r) => match self.values.get(r.index()) {
                Some(StepValue::ColumnView { attribute, .. })
                | Some(StepValue::Grouped { attribute, .. })
                | Some(StepValue::Ordered { attribute, .. }) => attribute.clone(),
                _ => r.to_string(),
            },
        }
    }

    /// Label of the quantity an AGGREGATE reduces.
    pub fn aggregate_label(&self, records: usize) -> Option<String> {
        match self.values.get(records) {
            Some(StepValue::ColumnView { attribute, .. }) => Some(attribute.clone()),
            Some(StepValue::Grouped {
                attribute, method, ..
            }) => Some(format!("{} per {}", method.as_str(), attribute)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Translation {
    pub actions: Vec<Action>,
    pub warnings: Vec<Warning>,
}

pub(crate) fn format_value(value: f64) -> String {
    format_number(value, 2)
}

pub(crate) fn cell_label(cell: &Cell) -> String {
    cell.text().map_or_else(|| "(null)".to_string(), |t| t.to_string())
}

fn params() -> ActionParams {
    ActionParams::default()
}

fn minus(a: &[RowId], b: &[RowId]) -> Vec<RowId> {
    let b: BTreeSet<RowId> = b.iter().copied().collect();
    a.iter().copied().filter(|id| !b.contains(id)).collect()
}

/// Rows an aggregate annotation points at: the extremal rows for max and
/// min, every covered row otherwise.
fn aggregate_targets(input: Option<&StepValue>, method: AggMethod, result: f64, rows: &[RowId]) -> Vec<RowId> {
    if !matches!(method, AggMethod::Max | AggMethod::Min) {
        return rows.to_vec();
    }
    match input {
        Some(StepValue::ColumnView { rows, values, .. }) => rows
            .iter()
            .zip(values)
            .filter(|(_, v)| v.as_number() == Some(result))
            .map(|(r, _)| *r)
            .collect(),
        Some(StepValue::Grouped { groups, .. }) => groups
            .iter()
            .filter(|g| g.value == Some(result))
            .flat_map(|g| g.rows.iter().copied())
            .collect(),
        _ => rows.to_vec(),
    }
}

/// Maps one executed operator to its data, visual and annotation actions.
pub fn translate_op(op: &QdmrOp, ctx: &TranslateContext<'_>) -> Translation {
    let value = ctx.value();
    let rows = value.rows();
    let previous = ctx.previous_rows();
    let hidden = minus(previous, rows);
    let mut out = Translation::default();

    if ctx.index > 0 && !matches!(op, QdmrOp::Select { .. } | QdmrOp::Union { .. } | QdmrOp::Discard { .. }) {
        let returning = minus(rows, previous);
        if !returning.is_empty() {
            out.warnings.push(Warning::new(
                "UnitsReintroduced",
                format!("{} records reappear that the previous step did not show", returning.len()),
            ));
            out.actions.push(Action::new(
                ActionKind::Select,
                ActionParams {
                    targets: returning,
                    ..params()
                },
            ));
        }
    }

    let filter = |attribute: String, condition: String| {
        Action::new(
            ActionKind::Filter,
            ActionParams {
                attribute: Some(attribute),
                condition: Some(condition),
                ..params()
            },
        )
    };
    let highlight = || {
        Action::new(
            ActionKind::Highlight,
            ActionParams {
                targets: rows.to_vec(),
                ..params()
            },
        )
    };
    let hide = || {
        Action::new(
            ActionKind::Hide,
            ActionParams {
                targets: hidden.clone(),
                ..params()
            },
        )
    };

    match op {
        QdmrOp::Select { filter: f, .. } => {
            out.actions.push(Action::new(
                ActionKind::Select,
                ActionParams {
                    attribute: f.as_ref().map(|f| f.attribute.clone()),
                    condition: f.as_ref().map(|f| f.condition.to_string()),
                    targets: rows.to_vec(),
                    ..params()
                },
            ));
            out.actions.push(Action::bare(ActionKind::Layout));
        }
        QdmrOp::Project { attribute, .. } => {
            let kind = match ctx.kind_of(attribute) {
                Some(ColumnKind::Numerical) => Some(ActionKind::Size),
                Some(ColumnKind::Categorical) => Some(ActionKind::Color),
                Some(ColumnKind::Temporal) => Some(ActionKind::XAxis),
                _ => None,
            };
            match kind {
                Some(kind) => out.actions.push(Action::new(
                    kind,
                    ActionParams {
                        attribute: Some(attribute.clone()),
                        ..params()
                    },
                )),
                None => out.warnings.push(Warning::new(
                    "UnencodableAttribute",
                    format!("free-text attribute {attribute} has no visual channel"),
                )),
            }
        }
        QdmrOp::Comparative {
            attribute, condition, ..
        } => {
            out.actions.push(filter(ctx.attribute_name(attribute), condition.to_string()));
            out.actions.push(highlight());
            out.actions.push(hide());
        }
        QdmrOp::Superlative {
            attribute, extremum, ..
        } => {
            out.actions.push(filter(ctx.attribute_name(attribute), extremum.as_str().to_string()));
            out.actions.push(highlight());
            out.actions.push(hide());
        }
        QdmrOp::Aggregate { records, method } => {
            out.actions.push(Action::new(
                ActionKind::Aggregate,
                ActionParams {
                    method: Some(*method),
                    ..params()
                },
            ));
            let result = value.scalar().unwrap_or(0.0);
            let text = match (method, ctx.aggregate_label(records.index())) {
                (AggMethod::Count, _) | (_, None) => format!("{}: {}", method.as_str(), format_value(result)),
                (m, Some(label)) => format!("{} {}: {}", m.as_str(), label, format_value(result)),
            };
            out.actions.push(Action::new(
                ActionKind::Annotate,
                ActionParams {
                    notes: vec![Note {
                        targets: aggregate_targets(ctx.values.get(records.index()), *method, result, rows),
                        group: None,
                        text,
                    }],
                    ..params()
                },
            ));
        }
        QdmrOp::Group { attribute, .. } => {
            let groups = match value {
                StepValue::Grouped { groups, .. } => groups.as_slice(),
                _ => &[],
            };
            let kind = ctx.kind_of(attribute);
            let x_free = ctx
                .x_bound
                .is_none_or(|bound| crate::text::same_name(bound, attribute));
            let axis = match (kind, ctx.policy) {
                (Some(ColumnKind::Temporal), _) => ActionKind::XAxis,
                (_, GroupAxisPolicy::TableDefault) => ActionKind::YAxis,
                (_, GroupAxisPolicy::Adaptive) if groups.len() <= MAX_X_GROUPS && x_free => ActionKind::XAxis,
                _ => ActionKind::YAxis,
            };
            out.actions.push(Action::new(
                axis,
                ActionParams {
                    attribute: Some(attribute.clone()),
                    ..params()
                },
            ));
            let notes = groups
                .iter()
                .map(|g| {
                    let label = cell_label(&g.key);
                    Note {
                        targets: g.rows.clone(),
                        text: format!(
                            "{}: {}",
                            label,
                            g.value.map_or_else(|| "n/a".to_string(), format_value)
                        ),
                        group: Some(label),
                    }
                })
                .collect();
            out.actions.push(Action::new(
                ActionKind::Annotate,
                ActionParams {
                    notes,
                    ..params()
                },
            ));
        }
        QdmrOp::Union { .. } => {
            out.actions.push(Action::new(
                ActionKind::Union,
                ActionParams {
                    targets: minus(rows, previous),
                    ..params()
                },
            ));
        }
        QdmrOp::Discard { .. } => {
            // The kept records may include some the previous step hid.
            out.actions.push(Action::new(
                ActionKind::Filter,
                ActionParams {
                    targets: minus(rows, previous),
                    ..params()
                },
            ));
            out.actions.push(hide());
        }
        QdmrOp::Intersection { .. } => {
            out.actions.push(Action::bare(ActionKind::Intersect));
            out.actions.push(hide());
        }
        QdmrOp::Sort {
            attribute, order, ..
        } => {
            out.actions.push(Action::new(
                ActionKind::Sort,
                ActionParams {
                    attribute: Some(attribute.clone()),
                    order: Some(*order),
                    ..params()
                },
            ));
        }
    }
    out
}
