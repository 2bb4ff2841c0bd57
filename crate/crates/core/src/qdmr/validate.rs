use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{AggMethod, Attribute, Comparator, Condition, OpKind, Pipeline, QdmrOp, StepRef};
use crate::dataset::{ColumnKind, Table};

/// Static shape of a step's output, mirroring the executor's value variants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Records,
    Column { name: String, kind: ColumnKind },
    Grouped { key: String },
    Scalar,
    Ordered,
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Records => "records",
            Shape::Column { .. } => "column",
            Shape::Grouped { .. } => "grouped",
            Shape::Scalar => "scalar",
            Shape::Ordered => "ordered",
        }
    }

    /// Every shape except a scalar carries a row set.
    pub fn has_records(&self) -> bool {
        !matches!(self, Shape::Scalar)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code")]
pub enum ValidationErrorKind {
    FirstStepNotSelect,
    UnknownTable {
        name: String,
    },
    UnknownColumn {
        name: String,
    },
    KindMismatch {
        column: String,
        kind: ColumnKind,
        literal: String,
    },
    NonNumericAggregate {
        method: AggMethod,
        detail: String,
    },
    VariantMismatch {
        expected: String,
        found: String,
    },
    UnorderedComparison {
        column: String,
        comparator: Comparator,
    },
    UnorderedAttribute {
        column: String,
    },
}

impl ValidationErrorKind {
    pub fn code(&self) -> &'static str {
        match self {
            ValidationErrorKind::FirstStepNotSelect => "FirstStepNotSelect",
            ValidationErrorKind::UnknownTable { .. } => "UnknownTable",
            ValidationErrorKind::UnknownColumn { .. } => "UnknownColumn",
            ValidationErrorKind::KindMismatch { .. } => "KindMismatch",
            ValidationErrorKind::NonNumericAggregate { .. } => "NonNumericAggregate",
            ValidationErrorKind::VariantMismatch { .. } => "VariantMismatch",
            ValidationErrorKind::UnorderedComparison { .. } => "UnorderedComparison",
            ValidationErrorKind::UnorderedAttribute { .. } => "UnorderedAttribute",
        }
    }
}

/// A problem found at a one-based step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub step: usize,
    #[serde(flatten)]
    pub kind: ValidationErrorKind,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step #{}: ", self.step)?;
        match &self.kind {
            ValidationErrorKind::FirstStepNotSelect => f.write_str("the first step must be SELECT"),
            ValidationErrorKind::UnknownTable { name } => write!(f, "unknown table `{name}`"),
            ValidationErrorKind::UnknownColumn { name } => write!(f, "unknown column `{name}`"),
            ValidationErrorKind::KindMismatch {
                column,
                kind,
                literal,
            } => write!(f, "`{literal}` is not a {kind} value for column `{column}`"),
            ValidationErrorKind::NonNumericAggregate { method, detail } => {
                write!(f, "{} needs numerical values ({detail})", method.as_str())
            }
            ValidationErrorKind::VariantMismatch { expected, found } => {
                write!(f, "expected {expected} input, found {found}")
            }
            ValidationErrorKind::UnorderedComparison { column, comparator } => write!(
                f,
                "`{}` needs an ordered column but `{column}` is not",
                comparator.symbol()
            ),
            ValidationErrorKind::UnorderedAttribute { column } => {
                write!(f, "column `{column}` has no max or min")
            }
        }
    }
}

struct Checker<'a> {
    table: &'a Table,
    shapes: Vec<Option<Shape>>,
    errors: Vec<ValidationError>,
    step: usize,
}

impl Checker<'_> {
    fn push(&mut self, kind: ValidationErrorKind) {
        self.errors.push(ValidationError {
            step: self.step,
            kind,
        });
    }

    fn shape(&self, r: StepRef) -> Option<&Shape> {
        self.shapes.get(r.index()).and_then(Option::as_ref)
    }

    fn column(&mut self, name: &str) -> Option<(String, ColumnKind)> {
        match self.table.column(name) {
            Some(c) => Some((c.name.clone(), c.kind)),
            None => {
                self.push(ValidationErrorKind::UnknownColumn {
                    name: name.to_string(),
                });
                None
            }
        }
    }

    fn records(&mut self, r: StepRef) {
        if let Some(Shape::Scalar) = self.shape(r) {
            self.push(ValidationErrorKind::VariantMismatch {
                expected: "records".into(),
                found: "scalar".into(),
            });
        }
    }

    /// Resolves a COMPARATIVE or SUPERLATIVE attribute to a column.
    fn attribute(&mut self, a: &Attribute) -> Option<(String, ColumnKind)> {
        match a {
            Attribute::Column(name) => self.column(name),
            Attribute::Step(r) => match self.shape(*r).cloned() {
                Some(Shape::Column { name, kind }) => Some((name, kind)),
                Some(other) => {
                    self.push(ValidationErrorKind::VariantMismatch {
                        expected: "column".into(),
                        found: other.name().into(),
                    });
                    None
                }
                None => None,
            },
        }
    }

    fn condition(&mut self, column: &str, kind: ColumnKind, c: &Condition) {
        if !c.literal.fits(kind) {
            self.push(ValidationErrorKind::KindMismatch {
                column: column.to_string(),
                kind,
                literal: c.literal.as_str().to_string(),
            });
        }
        if !c.comparator.is_equality() && !kind.is_ordered() {
            self.push(ValidationErrorKind::UnorderedComparison {
                column: column.to_string(),
                comparator: c.comparator,
            });
        }
    }

    /// Non-count methods need numerical values reached through a PROJECT
    /// or a GROUP.
    fn numeric_input(&mut self, method: AggMethod, r: StepRef, allow_grouped: bool) {
        if method == AggMethod::Count {
            return;
        }
        let detail = match self.shape(r) {
            None => return,
            Some(Shape::Column { kind, .. }) if *kind == ColumnKind::Numerical => return,
            Some(Shape::Grouped { .. }) if allow_grouped => return,
            Some(Shape::Column { name, kind }) => alloc::format!("column `{name}` is {kind}"),
            Some(other) => alloc::format!("input is {}, not a projected column", other.name()),
        };
        self.push(ValidationErrorKind::NonNumericAggregate { method, detail });
    }

    fn check(&mut self, op: &QdmrOp) -> Option<Shape> {
        match op {
            QdmrOp::Select { source, filter } => {
                if !self.table.is_named(source) {
                    self.push(ValidationErrorKind::UnknownTable {
                        name: source.clone(),
                    });
                }
                if let Some(filter) = filter {
                    if let Some((name, kind)) = self.column(&filter.attribute) {
                        self.condition(&name, kind, &filter.condition);
                    }
                }
                Some(Shape::Records)
            }
            QdmrOp::Project { attribute, records } => {
                self.records(*records);
                let (name, kind) = self.column(attribute)?;
                Some(Shape::Column { name, kind })
            }
            QdmrOp::Comparative {
                records,
                attribute,
                condition,
            } => {
                self.records(*records);
                if let Some((name, kind)) = self.attribute(attribute) {
                    self.condition(&name, kind, condition);
                }
                Some(Shape::Records)
            }
            QdmrOp::Superlative {
                records, attribute, ..
            } => {
                self.records(*records);
                if let Some((name, kind)) = self.attribute(attribute) {
                    if !kind.is_ordered() {
                        self.push(ValidationErrorKind::UnorderedAttribute { column: name });
                    }
                }
                Some(Shape::Records)
            }
            QdmrOp::Aggregate { records, method } => {
                self.records(*records);
                self.numeric_input(*method, *records, true);
                Some(Shape::Scalar)
            }
            QdmrOp::Group {
                records,
                attribute,
                method,
            } => {
                self.records(*records);
                self.numeric_input(*method, *records, false);
                let (key, _) = self.column(attribute)?;
                Some(Shape::Grouped { key })
            }
            QdmrOp::Union { left, right }
            | QdmrOp::Discard { left, right }
            | QdmrOp::Intersection { left, right } => {
                self.records(*left);
                self.records(*right);
                Some(Shape::Records)
            }
            QdmrOp::Sort {
                records, attribute, ..
            } => {
                self.records(*records);
                self.column(attribute)?;
                Some(Shape::Ordered)
            }
        }
    }
}

/// Static shapes of every step, `None` where a step is too broken to type.
pub fn infer_shapes(p: &Pipeline, t: &Table) -> Vec<Option<Shape>> {
    run(p, t).0
}

fn run(p: &Pipeline, t: &Table) -> (Vec<Option<Shape>>, Vec<ValidationError>) {
    let mut checker = Checker {
        table: t,
        shapes: Vec::with_capacity(p.len()),
        errors: Vec::new(),
        step: 1,
    };
    if p.steps().first().map(QdmrOp::kind) != Some(OpKind::Select) {
        checker.push(ValidationErrorKind::FirstStepNotSelect);
    }
    for (i, op) in p.steps().iter().enumerate() {
        checker.step = i + 1;
        let shape = checker.check(op);
        checker.shapes.push(shape);
    }
    (checker.shapes, checker.errors)
}

/// Checks a pipeline against a table's schema. Returns every problem found.
pub fn validate_pipeline(p: &Pipeline, t: &Table) -> Result<(), Vec<ValidationError>> {
    let (_, errors) = run(p, t);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
