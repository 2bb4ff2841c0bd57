//! Pipeline execution over an in-memory table.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::Serialize;

use crate::dataset::{Cell, ColumnKind, RowId, Table};
use crate::qdmr::{
    AggMethod, Attribute, Condition, Extremum, Pipeline, QdmrOp, SortOrder, StepRef,
};

/// One group of a GROUP result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Group {
    pub key: Cell,
    pub rows: Vec<RowId>,
    /// The aggregate over the group, `None` when a non-sum method has no
    /// non-null values to reduce.
    pub value: Option<f64>,
}

/// The output of one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "variant")]
pub enum StepValue {
    RecordSet {
        rows: Vec<RowId>,
    },
    ColumnView {
        rows: Vec<RowId>,
        attribute: String,
        values: Vec<Cell>,
    },
    Grouped {
        rows: Vec<RowId>,
        attribute: String,
        method: AggMethod,
        groups: Vec<Group>,
    },
    Scalar {
        value: f64,
        method: AggMethod,
        rows: Vec<RowId>,
    },
    Ordered {
        rows: Vec<RowId>,
        attribute: String,
        order: SortOrder,
    },
}

impl StepValue {
    pub fn variant_name(&self) -> &'static str {
        match self {
            StepValue::RecordSet { .. } => "records",
            StepValue::ColumnView { .. } => "column",
            StepValue::Grouped { .. } => "grouped",
            StepValue::Scalar { .. } => "scalar",
            StepValue::Ordered { .. } => "ordered",
        }
    }

    /// Rows the value covers. For a scalar these are its source rows.
    pub fn rows(&self) -> &[RowId] {
        match self {
            StepValue::RecordSet { rows }
            | StepValue::ColumnView { rows, .. }
            | StepValue::Grouped { rows, .. }
            | StepValue::Scalar { rows, .. }
            | StepValue::Ordered { rows, .. } => rows,
        }
    }

    /// The row set when the value may stand in for records.
    pub fn records(&self) -> Option<&[RowId]> {
        match self {
            StepValue::Scalar { .. } => None,
            other => Some(other.rows()),
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match self {
            StepValue::Scalar { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "code")]
pub enum ExecErrorKind {
    VariantMismatch { expected: String, found: String },
    NonNumericValue { detail: String },
    EmptyInputForExtremum { method: String },
    UnorderedComparison { column: String },
    UnknownTable { name: String },
    UnknownColumn { name: String },
    InvalidLiteral { column: String, literal: String },
    DanglingReference { target: usize },
}

impl ExecErrorKind {
    pub fn code(&self) -> &'static str {
        match self {
            ExecErrorKind::VariantMismatch { .. } => "VariantMismatch",
            ExecErrorKind::NonNumericValue { .. } => "NonNumericValue",
            ExecErrorKind::EmptyInputForExtremum { .. } => "EmptyInputForExtremum",
            ExecErrorKind::UnorderedComparison { .. } => "UnorderedComparison",
            ExecErrorKind::UnknownTable { .. } => "UnknownTable",
            ExecErrorKind::UnknownColumn { .. } => "UnknownColumn",
            ExecErrorKind::InvalidLiteral { .. } => "InvalidLiteral",
            ExecErrorKind::DanglingReference { .. } => "DanglingReference",
        }
    }
}

/// An execution failure at a one-based step.
#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
pub struct ExecError {
    pub step: usize,
    #[serde(flatten)]
    pub kind: ExecErrorKind,
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step #{}: ", self.step)?;
        match &self.kind {
            ExecErrorKind::VariantMismatch { expected, found } => {
                write!(f, "expected {expected} input, found {found}")
            }
            ExecErrorKind::NonNumericValue { detail } => write!(f, "non-numeric value: {detail}"),
            ExecErrorKind::EmptyInputForExtremum { method } => {
                write!(f, "{method} over an empty input")
            }
            ExecErrorKind::UnorderedComparison { column } => {
                write!(f, "column `{column}` only supports = and !=")
            }
            ExecErrorKind::UnknownTable { name } => write!(f, "unknown table `{name}`"),
            ExecErrorKind::UnknownColumn { name } => write!(f, "unknown column `{name}`"),
            ExecErrorKind::InvalidLiteral { column, literal } => {
                write!(f, "`{literal}` does not parse under column `{column}`")
            }
            ExecErrorKind::DanglingReference { target } => {
                write!(f, "reference #{target} does not resolve")
            }
        }
    }
}

/// Tests one cell against a condition under the column's kind. Nulls never
/// match.
pub fn condition_holds(cell: &Cell, kind: ColumnKind, condition: &Condition) -> Result<bool, ExecErrorKind> {
    let cmp = condition.comparator;
    let literal = &condition.literal;
    let invalid = || ExecErrorKind::InvalidLiteral {
        column: String::new(),
        literal: literal.as_str().to_string(),
    };
    if !cmp.is_equality() && !kind.is_ordered() {
        return Err(ExecErrorKind::UnorderedComparison {
            column: String::new(),
        });
    }
    let ord = match kind {
        ColumnKind::Numerical => {
            let rhs = literal.number().ok_or_else(invalid)?;
            match cell {
                Cell::Number { value, .. } => value.partial_cmp(&rhs),
                _ => None,
            }
        }
        ColumnKind::Temporal => {
            let rhs = literal.temporal().ok_or_else(invalid)?;
            match cell {
                // A bare year literal compares against the year of a date.
                Cell::Date { value, .. } if rhs.month == 0 => Some(value.year.cmp(&rhs.year)),
                Cell::Date { value, .. } => Some(value.cmp(&rhs)),
                _ => None,
            }
        }
        ColumnKind::Categorical | ColumnKind::Text => cell
            .group_key()
            .map(|key| key.cmp(&crate::normalize_text(literal.as_str()))),
    };
    Ok(ord.is_some_and(|o| cmp.holds(o)))
}

fn reduce(method: AggMethod, values: &[f64]) -> Option<f64> {
    if method == AggMethod::Count {
        return Some(values.len() as f64);
    }
    if method == AggMethod::Sum {
        return Some(values.iter().sum());
    }
    if values.is_empty() {
        return None;
    }
    Some(match method {
        AggMethod::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        AggMethod::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        AggMethod::Avg => values.iter().sum::<f64>() / values.len() as f64,
        AggMethod::Median => {
            let mut sorted = values.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            let mid = sorted.len() / 2;
            if sorted.len().is_multiple_of(2) {
                (sorted[mid - 1] + sorted[mid]) / 2.0
            } else {
                sorted[mid]
            }
        }
        AggMethod::Count | AggMethod::Sum => unreachable!(),
    })
}

struct Env<'a> {
    table: &'a Table,
    prior: &'a [StepValue],
}

impl<'a> Env<'a> {
    fn get(&self, r: StepRef) -> Result<&'a StepValue, ExecErrorKind> {
        if r.0 == 0 {
            return Err(ExecErrorKind::DanglingReference { target: 0 });
        }
        self.prior
            .get(r.index())
            .ok_or(ExecErrorKind::DanglingReference { target: r.0 })
    }

    fn records(&self, r: StepRef) -> Result<&'a [RowId], ExecErrorKind> {
        let value = self.get(r)?;
        value.records().ok_or_else(|| ExecErrorKind::VariantMismatch {
            expected: "records".into(),
            found: value.variant_name().into(),
        })
    }

    fn column(&self, name: &str) -> Result<(usize, ColumnKind, String), ExecErrorKind> {
        let idx = self
            .table
            .column_index(name)
            .ok_or_else(|| ExecErrorKind::UnknownColumn { name: name.into() })?;
        let col = &self.table.columns()[idx];
        Ok((idx, col.kind, col.name.clone()))
    }

    fn attribute(&self, a: &Attribute) -> Result<(usize, ColumnKind, String), ExecErrorKind> {
        match a {
            Attribute::Column(name) => self.column(name),
            Attribute::Step(r) => match self.get(*r)? {
                StepValue::ColumnView { attribute, .. } => self.column(attribute),
                other => Err(ExecErrorKind::VariantMismatch {
                    expected: "column".into(),
                    found: other.variant_name().into(),
                }),
            },
        }
    }

    fn filter(
        &self,
        rows: &[RowId],
        column: (usize, ColumnKind, String),
        condition: &Condition,
    ) -> Result<Vec<RowId>, ExecErrorKind> {
        let (idx, kind, name) = column;
        let mut out = Vec::new();
        for &row in rows {
            let keep = condition_holds(self.table.cell(row, idx), kind, condition).map_err(
                |e| match e {
                    ExecErrorKind::UnorderedComparison { .. } => {
                        ExecErrorKind::UnorderedComparison { column: name.clone() }
                    }
                    ExecErrorKind::InvalidLiteral { literal, .. } => ExecErrorKind::InvalidLiteral {
                        column: name.clone(),
                        literal,
                    },
                    other => other,
                },
            )?;
            if keep {
                out.push(row);
            }
        }
        if rows.is_empty() {
            // Still reject malformed conditions on empty input.
            condition_holds(&Cell::Null, kind, condition).map_err(|e| match e {
                ExecErrorKind::UnorderedComparison { .. } => {
                    ExecErrorKind::UnorderedComparison { column: name.clone() }
                }
                ExecErrorKind::InvalidLiteral { literal, .. } => ExecErrorKind::InvalidLiteral {
                    column: name.clone(),
                    literal,
                },
                other => other,
            })?;
        }
        Ok(out)
    }

    /// Numeric values of a projected numerical column, nulls dropped.
    fn numbers(&self, value: &StepValue) -> Result<Vec<f64>, ExecErrorKind> {
        match value {
            StepValue::ColumnView {
                attribute, values, ..
            } => {
                let (_, kind, name) = self.column(attribute)?;
                if kind != ColumnKind::Numerical {
                    return Err(ExecErrorKind::NonNumericValue {
                        detail: alloc::format!("column `{name}` is {kind}"),
                    });
                }
                Ok(values.iter().filter_map(Cell::as_number).collect())
            }
            other => Err(ExecErrorKind::NonNumericValue {
                detail: alloc::format!("input is {}, not a projected column", other.variant_name()),
            }),
        }
    }
}

fn set_of(rows: &[RowId]) -> BTreeSet<RowId> {
    rows.iter().copied().collect()
}

/// Evaluates one operator given the values of all earlier steps.
pub fn eval_op(op: &QdmrOp, prior: &[StepValue], table: &Table) -> Result<StepValue, ExecErrorKind> {
    let env = Env { table, prior };
    match op {
        QdmrOp::Select { source, filter } => {
            if !table.is_named(source) {
                return Err(ExecErrorKind::UnknownTable {
                    name: source.clone(),
                });
            }
            let all: Vec<RowId> = table.row_ids().collect();
            let rows = match filter {
                Some(f) => env.filter(&all, env.column(&f.attribute)?, &f.condition)?,
                None => all,
            };
            Ok(StepValue::RecordSet { rows })
        }
        QdmrOp::Project { attribute, records } => {
            let rows = env.records(*records)?.to_vec();
            let (idx, _, name) = env.column(attribute)?;
            let values = rows.iter().map(|r| table.cell(*r, idx).clone()).collect();
            Ok(StepValue::ColumnView {
                rows,
                attribute: name,
                values,
            })
        }
        QdmrOp::Comparative {
            records,
            attribute,
            condition,
        } => {
            let rows = env.records(*records)?;
            let column = env.attribute(attribute)?;
            Ok(StepValue::RecordSet {
                rows: env.filter(rows, column, condition)?,
            })
        }
        QdmrOp::Superlative {
            records,
            attribute,
            extremum,
        } => {
            let rows = env.records(*records)?;
            let (idx, kind, name) = env.attribute(attribute)?;
            if !kind.is_ordered() {
                return Err(ExecErrorKind::UnorderedComparison { column: name });
            }
            let keyed: Vec<(RowId, f64)> = rows
                .iter()
                .filter_map(|r| table.cell(*r, idx).ordinal().map(|v| (*r, v)))
                .collect();
            let best = match extremum {
                Extremum::Max => keyed.iter().map(|(_, v)| *v).fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.max(v)))
                }),
                Extremum::Min => keyed.iter().map(|(_, v)| *v).fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.min(v)))
                }),
            };
            let best = best.ok_or(ExecErrorKind::EmptyInputForExtremum {
                method: extremum.as_str().into(),
            })?;
            Ok(StepValue::RecordSet {
                rows: keyed
                    .into_iter()
                    .filter(|(_, v)| *v == best)
                    .map(|(r, _)| r)
                    .collect(),
            })
        }
        QdmrOp::Aggregate { records, method } => {
            let input = env.get(*records)?;
            let rows = env.records(*records)?.to_vec();
            let value = match (input, method) {
                (StepValue::Grouped { groups, .. }, AggMethod::Count) => Some(groups.len() as f64),
                (StepValue::Grouped { groups, .. }, m) => {
                    let values: Vec<f64> = groups.iter().filter_map(|g| g.value).collect();
                    reduce(*m, &values)
                }
                (_, AggMethod::Count) => Some(rows.len() as f64),
                (other, m) => reduce(*m, &env.numbers(other)?),
            };
            let value = value.ok_or(ExecErrorKind::EmptyInputForExtremum {
                method: method.as_str().into(),
            })?;
            Ok(StepValue::Scalar {
                value,
                method: *method,
                rows,
            })
        }
        QdmrOp::Group {
            records,
            attribute,
            method,
        } => {
            let input = env.get(*records)?;
            let rows = env.records(*records)?.to_vec();
            let (idx, _, name) = env.column(attribute)?;
            let numbers: Option<BTreeMap<RowId, Option<f64>>> = match method {
                AggMethod::Count => None,
                _ => {
                    env.numbers(input)?;
                    match input {
                        StepValue::ColumnView { rows, values, .. } => Some(
                            rows.iter()
                                .zip(values)
                                .map(|(r, c)| (*r, c.as_number()))
                                .collect(),
                        ),
                        _ => None,
                    }
                }
            };
            // Groups are ordered by the first table row carrying the key.
            let mut by_key: BTreeMap<Option<String>, usize> = BTreeMap::new();
            let mut groups: Vec<(RowId, Group)> = Vec::new();
            for &row in &rows {
                let cell = table.cell(row, idx);
                let slot = *by_key.entry(cell.group_key()).or_insert_with(|| {
                    groups.push((
                        row,
                        Group {
                            key: cell.clone(),
                            rows: Vec::new(),
                            value: None,
                        },
                    ));
                    groups.len() - 1
                });
                let (first, group) = &mut groups[slot];
                if row < *first {
                    *first = row;
                    group.key = cell.clone();
                }
                group.rows.push(row);
            }
            groups.sort_by_key(|(first, _)| *first);
            let groups = groups
                .into_iter()
                .map(|(_, mut g)| {
                    g.value = match &numbers {
                        None => Some(g.rows.len() as f64),
                        Some(map) => {
                            let values: Vec<f64> =
                                g.rows.iter().filter_map(|r| map.get(r).copied().flatten()).collect();
                            reduce(*method, &values)
                        }
                    };
                    g
                })
                .collect();
            Ok(StepValue::Grouped {
                rows,
                attribute: name,
                method: *method,
                groups,
            })
        }
        QdmrOp::Union { left, right } => {
            let a = env.records(*left)?;
            let b = env.records(*right)?;
            let mut seen = set_of(a);
            let mut rows = a.to_vec();
            for r in b {
                if seen.insert(*r) {
                    rows.push(*r);
                }
            }
            Ok(StepValue::RecordSet { rows })
        }
        QdmrOp::Discard { left, right } => {
            let b = set_of(env.records(*right)?);
            let rows = env.records(*left)?.iter().copied().filter(|r| !b.contains(r)).collect();
            Ok(StepValue::RecordSet { rows })
        }
        QdmrOp::Intersection { left, right } => {
            let b = set_of(env.records(*right)?);
            let rows = env.records(*left)?.iter().copied().filter(|r| b.contains(r)).collect();
            Ok(StepValue::RecordSet { rows })
        }
        QdmrOp::Sort {
            records,
            attribute,
            order,
        } => {
            let mut rows = env.records(*records)?.to_vec();
            let (idx, _, name) = env.column(attribute)?;
            rows.sort_by(|a, b| {
                let (x, y) = (table.cell(*a, idx), table.cell(*b, idx));
                match (order, x.is_null() || y.is_null()) {
                    (SortOrder::Desc, false) => y.sort_cmp(x),
                    _ => x.sort_cmp(y),
                }
            });
            Ok(StepValue::Ordered {
                rows,
                attribute: name,
                order: *order,
            })
        }
    }
}

/// Runs every step in order, returning one value per step.
pub fn execute_pipeline(p: &Pipeline, t: &Table) -> Result<Vec<StepValue>, ExecError> {
    let mut values = Vec::with_capacity(p.len());
    for (i, op) in p.steps().iter().enumerate() {
        let value = eval_op(op, &values, t).map_err(|kind| ExecError { step: i + 1, kind })?;
        values.push(value);
    }
    Ok(values)
}
