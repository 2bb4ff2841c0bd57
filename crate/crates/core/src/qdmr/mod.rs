//! QDMR pipelines: the ten operators, their arguments and `#k` step
//! references.
//!
//! The script surface form is one statement per line:
//!
//! ```text
//! -- how many students were born in 2000?
//! #1 = SELECT("students")
//! #2 = PROJECT("birth_year", #1)
//! #3 = COMPARATIVE(#1, #2, "= 2000")
//! #4 = AGGREGATE(count, #3)
//! ```

mod graph;
mod parse;
mod validate;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{parse_number, ColumnKind, Temporal};

pub use graph::{dependency_graph, DependencyGraph};
pub use parse::{parse_condition, parse_op, parse_pipeline, parse_steps, ParseError, RefPolicy};
pub use validate::{infer_shapes, validate_pipeline, Shape, ValidationError, ValidationErrorKind};

/// One-based reference to an earlier step's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StepRef(pub usize);

impl StepRef {
    pub fn index(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for StepRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// COMPARATIVE and SUPERLATIVE take either a projected step or a bare column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Step(StepRef),
    Column(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

impl Comparator {
    pub const ALL: [Comparator; 6] = [
        Comparator::Eq,
        Comparator::Ne,
        Comparator::Gt,
        Comparator::Lt,
        Comparator::Ge,
        Comparator::Le,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "=",
            Comparator::Ne => "!=",
            Comparator::Gt => ">",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Le => "<=",
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, Comparator::Eq | Comparator::Ne)
    }

    pub fn negate(self) -> Comparator {
        match self {
            Comparator::Eq => Comparator::Ne,
            Comparator::Ne => Comparator::Eq,
            Comparator::Gt => Comparator::Le,
            Comparator::Lt => Comparator::Ge,
            Comparator::Ge => Comparator::Lt,
            Comparator::Le => Comparator::Gt,
        }
    }

    pub fn holds(self, ord: core::cmp::Ordering) -> bool {
        use core::cmp::Ordering::*;
        match self {
            Comparator::Eq => ord == Equal,
            Comparator::Ne => ord != Equal,
            Comparator::Gt => ord == Greater,
            Comparator::Lt => ord == Less,
            Comparator::Ge => ord != Less,
            Comparator::Le => ord != Greater,
        }
    }
}

/// A condition literal, kept as written and interpreted under the kind of
/// the column it is compared against.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Literal(String);

impl Literal {
    pub fn new(text: &str) -> Self {
        Literal(String::from(text.trim()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn number(&self) -> Option<f64> {
        parse_number(&self.0)
    }

    pub fn temporal(&self) -> Option<Temporal> {
        Temporal::parse(&self.0)
    }

    /// True when the literal can be compared against a column of `kind`.
    pub fn fits(&self, kind: ColumnKind) -> bool {
        match kind {
            ColumnKind::Numerical => self.number().is_some(),
            ColumnKind::Temporal => self.temporal().is_some(),
            ColumnKind::Categorical | ColumnKind::Text => !self.0.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub comparator: Comparator,
    pub literal: Literal,
}

impl Condition {
    pub fn new(comparator: Comparator, literal: &str) -> Self {
        Condition {
            comparator,
            literal: Literal::new(literal),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.comparator.symbol(), self.literal.as_str())
    }
}

/// Optional SELECT filter: `SELECT("cars", "year", "= 1980")`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnFilter {
    pub attribute: String,
    pub condition: Condition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Max,
    Min,
}

impl Extremum {
    pub fn as_str(self) -> &'static str {
        match self {
            Extremum::Max => "max",
            Extremum::Min => "min",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggMethod {
    Count,
    Max,
    Min,
    Sum,
    Avg,
    Median,
}

impl AggMethod {
    pub const ALL: [AggMethod; 6] = [
        AggMethod::Count,
        AggMethod::Max,
        AggMethod::Min,
        AggMethod::Sum,
        AggMethod::Avg,
        AggMethod::Median,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggMethod::Count => "count",
            AggMethod::Max => "max",
            AggMethod::Min => "min",
            AggMethod::Sum => "sum",
            AggMethod::Avg => "avg",
            AggMethod::Median => "median",
        }
    }

    pub fn parse(s: &str) -> Option<AggMethod> {
        AggMethod::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortOrder {
    Asc,
    Desc,
}

impl SortOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            SortOrder::Asc => "asc",
            SortOrder::Desc => "desc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OpKind {
    Select,
    Project,
    Comparative,
    Superlative,
    Aggregate,
    Group,
    Union,
    Discard,
    Intersection,
    Sort,
}

impl OpKind {
    pub const ALL: [OpKind; 10] = [
        OpKind::Select,
        OpKind::Project,
        OpKind::Comparative,
        OpKind::Superlative,
        OpKind::Aggregate,
        OpKind::Group,
        OpKind::Union,
        OpKind::Discard,
        OpKind::Intersection,
        OpKind::Sort,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Select => "SELECT",
            OpKind::Project => "PROJECT",
            OpKind::Comparative => "COMPARATIVE",
            OpKind::Superlative => "SUPERLATIVE",
            OpKind::Aggregate => "AGGREGATE",
            OpKind::Group => "GROUP",
            OpKind::Union => "UNION",
            OpKind::Discard => "DISCARD",
            OpKind::Intersection => "INTERSECTION",
            OpKind::Sort => "SORT",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "UPPERCASE")]
pub enum QdmrOp {
    Select {
        source: String,
        filter: Option<ColumnFilter>,
    },
    Project {
        attribute: String,
        records: StepRef,
    },
    Comparative {
        records: StepRef,
        attribute: Attribute,
        condition: Condition,
    },
    Superlative {
        records: StepRef,
        attribute: Attribute,
        extremum: Extremum,
    },
    Aggregate {
        records: StepRef,
        method: AggMethod,
    },
    Group {
        records: StepRef,
        attribute: String,
        method: AggMethod,
    },
    Union {
        left: StepRef,
        right: StepRef,
    },
    Discard {
        left: StepRef,
        right: StepRef,
    },
    Intersection {
        left: StepRef,
        right: StepRef,
    },
    Sort {
        records: StepRef,
        attribute: String,
        order: SortOrder,
    },
}

impl QdmrOp {
    pub fn kind(&self) -> OpKind {
        match self {
            QdmrOp::Select { .. } => OpKind::Select,
            QdmrOp::Project { .. } => OpKind::Project,
            QdmrOp::Comparative { .. } => OpKind::Comparative,
            QdmrOp::Superlative { .. } => OpKind::Superlative,
            QdmrOp::Aggregate { .. } => OpKind::Aggregate,
            QdmrOp::Group { .. } => OpKind::Group,
            QdmrOp::Union { .. } => OpKind::Union,
            QdmrOp::Discard { .. } => OpKind::Discard,
            QdmrOp::Intersection { .. } => OpKind::Intersection,
            QdmrOp::Sort { .. } => OpKind::Sort,
        }
    }

    /// Every step this operator reads, in argument order, duplicates kept.
    pub fn refs(&self) -> Vec<StepRef> {
        let mut out = Vec::with_capacity(2);
        match self {
            QdmrOp::Select { .. } => {}
            QdmrOp::Project { records, .. }
            | QdmrOp::Aggregate { records, .. }
            | QdmrOp::Group { records, .. }
            | QdmrOp::Sort { records, .. } => out.push(*records),
            QdmrOp::Comparative {
                records, attribute, ..
            }
            | QdmrOp::Superlative {
                records, attribute, ..
            } => {
                out.push(*records);
                if let Attribute::Step(r) = attribute {
                    out.push(*r);
                }
            }
            QdmrOp::Union { left, right }
            | QdmrOp::Discard { left, right }
            | QdmrOp::Intersection { left, right } => {
                out.push(*left);
                out.push(*right);
            }
        }
        out
    }

    /// Rewrites every step reference through `f`.
    pub fn map_refs(&self, mut f: impl FnMut(StepRef) -> StepRef) -> QdmrOp {
        let mut op = self.clone();
        match &mut op {
            QdmrOp::Select { .. } => {}
            QdmrOp::Project { records, .. }
            | QdmrOp::Aggregate { records, .. }
            | QdmrOp::Group { records, .. }
            | QdmrOp::Sort { records, .. } => *records = f(*records),
            QdmrOp::Comparative {
                records, attribute, ..
            }
            | QdmrOp::Superlative {
                records, attribute, ..
            } => {
                *records = f(*records);
                if let Attribute::Step(r) = attribute {
                    *r = f(*r);
                }
            }
            QdmrOp::Union { left, right }
            | QdmrOp::Discard { left, right }
            | QdmrOp::Intersection { left, right } => {
                *left = f(*left);
                *right = f(*right);
            }
        }
        op
    }

    /// Column names mentioned directly by this operator.
    pub fn columns(&self) -> Vec<&str> {
        match self {
            QdmrOp::Select { filter, .. } => filter.iter().map(|f| f.attribute.as_str()).collect(),
            QdmrOp::Project { attribute, .. }
            | QdmrOp::Group { attribute, .. }
            | QdmrOp::Sort { attribute, .. } => alloc::vec![attribute.as_str()],
            QdmrOp::Comparative { attribute, .. } | QdmrOp::Superlative { attribute, .. } => {
                match attribute {
                    Attribute::Column(c) => alloc::vec![c.as_str()],
                    Attribute::Step(_) => Vec::new(),
                }
            }
            _ => Vec::new(),
        }
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

fn write_attribute(f: &mut fmt::Formatter<'_>, a: &Attribute) -> fmt::Result {
    match a {
        Attribute::Step(r) => write!(f, "{r}"),
        Attribute::Column(c) => write_quoted(f, c),
    }
}

impl fmt::Display for QdmrOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.kind())?;
        match self {
            QdmrOp::Select { source, filter } => {
                write_quoted(f, source)?;
                if let Some(filter) = filter {
                    f.write_str(", ")?;
                    write_quoted(f, &filter.attribute)?;
                    f.write_str(", ")?;
                    write_quoted(f, &alloc::format!("{}", filter.condition))?;
                }
            }
            QdmrOp::Project { attribute, records } => {
                write_quoted(f, attribute)?;
                write!(f, ", {records}")?;
            }
            QdmrOp::Comparative {
                records,
                attribute,
                condition,
            } => {
                write!(f, "{records}, ")?;
                write_attribute(f, attribute)?;
                f.write_str(", ")?;
                write_quoted(f, &alloc::format!("{condition}"))?;
            }
            QdmrOp::Superlative {
                records,
                attribute,
                extremum,
            } => {
                write!(f, "{records}, ")?;
                write_attribute(f, attribute)?;
                write!(f, ", {}", extremum.as_str())?;
            }
            QdmrOp::Aggregate { records, method } => {
                write!(f, "{}, {records}", method.as_str())?;
            }
            QdmrOp::Group {
                records,
                attribute,
                method,
            } => {
                write!(f, "{}, {records}, ", method.as_str())?;
                write_quoted(f, attribute)?;
            }
            QdmrOp::Union { left, right }
            | QdmrOp::Discard { left, right }
            | QdmrOp::Intersection { left, right } => {
                write!(f, "{left}, {right}")?;
            }
            QdmrOp::Sort {
                records,
                attribute,
                order,
            } => {
                write!(f, "{records}, ")?;
                write_quoted(f, attribute)?;
                write!(f, ", {}", order.as_str())?;
            }
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Decomposed,
    #[default]
    UserEdited,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Decomposed => "decomposed",
            Provenance::UserEdited => "user_edited",
        }
    }
}

/// A non-empty sequence of operators whose references all point backwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pipeline {
    steps: Vec<QdmrOp>,
    provenance: Provenance,
}

impl Pipeline {
    pub fn new(steps: Vec<QdmrOp>, provenance: Provenance) -> Result<Pipeline, ParseError> {
        if steps.is_empty() {
            return Err(ParseError::Empty);
        }
        for (i, op) in steps.iter().enumerate() {
            for r in op.refs() {
                if r.0 == 0 || r.0 > i {
                    return Err(ParseError::ForwardReference {
                        line: i + 1,
                        step: i + 1,
                        target: r.0,
                    });
                }
            }
        }
        Ok(Pipeline { steps, provenance })
    }

    pub fn steps(&self) -> &[QdmrOp] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Pipeline {
        self.provenance = provenance;
        self
    }

    pub fn into_steps(self) -> Vec<QdmrOp> {
        self.steps
    }

    /// True when every step after the first reads the step right before it.
    pub fn is_continuous(&self) -> bool {
        is_continuous(&self.steps)
    }

    /// Canonical form used for exact-match comparison: names lowercased,
    /// numeric literals reformatted, provenance dropped.
    pub fn normalized(&self) -> Vec<QdmrOp> {
        let lower = |s: &String| s.trim().to_lowercase();
        let literal = |l: &Literal| match l.number() {
            Some(v) => Literal(alloc::format!("{v}")),
            None => Literal(l.as_str().to_lowercase()),
        };
        let attr = |a: &Attribute| match a {
            Attribute::Column(c) => Attribute::Column(lower(c)),
            step => step.clone(),
        };
        self.steps
            .iter()
            .map(|op| match op {
                QdmrOp::Select { source, filter } => QdmrOp::Select {
                    source: lower(source),
                    filter: filter.as_ref().map(|fl| ColumnFilter {
                        attribute: lower(&fl.attribute),
                        condition: Condition {
                            comparator: fl.condition.comparator,
                            literal: literal(&fl.condition.literal),
                        },
                    }),
                },
                QdmrOp::Project { attribute, records } => QdmrOp::Project {
                    attribute: lower(attribute),
                    records: *records,
                },
                QdmrOp::Comparative {
                    records,
                    attribute,
                    condition,
                } => QdmrOp::Comparative {
                    records: *records,
                    attribute: attr(attribute),
                    condition: Condition {
                        comparator: condition.comparator,
                        literal: literal(&condition.literal),
                    },
                },
                QdmrOp::Superlative {
                    records,
                    attribute,
                    extremum,
                } => QdmrOp::Superlative {
                    records: *records,
                    attribute: attr(attribute),
                    extremum: *extremum,
                },
                QdmrOp::Group {
                    records,
                    attribute,
                    method,
                } => QdmrOp::Group {
                    records: *records,
                    attribute: lower(attribute),
                    method: *method,
                },
                QdmrOp::Sort {
                    records,
                    attribute,
                    order,
                } => QdmrOp::Sort {
                    records: *records,
                    attribute: lower(attribute),
                    order: *order,
                },
                other => other.clone(),
            })
            .collect()
    }

    pub fn same_as(&self, other: &Pipeline) -> bool {
        self.normalized() == other.normalized()
    }

    /// The script text, one `#k = KIND(...)` statement per line.
    pub fn to_script(&self) -> String {
        let mut out = String::new();
        for (i, op) in self.steps.iter().enumerate() {
            out.push_str(&alloc::format!("#{} = {}\n", i + 1, op));
        }
        out
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_script())
    }
}

pub(crate) fn is_continuous(steps: &[QdmrOp]) -> bool {
    steps
        .iter()
        .enumerate()
        .skip(1)
        .all(|(i, op)| op.refs().iter().any(|r| r.0 == i))
}
