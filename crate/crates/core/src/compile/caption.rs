use alloc::format;
use alloc::string::String;

use super::translate::{format_value, TranslateContext};
use crate::dataset::ColumnKind;
use crate::exec::StepValue;
use crate::qdmr::{AggMethod, Extremum, QdmrOp, SortOrder};

/// Longest caption, in characters.
pub const MAX_CAPTION_CHARS: usize = 140;

fn method_word(method: AggMethod) -> &'static str {
    match method {
        AggMethod::Count => "count",
        AggMethod::Max => "maximum",
        AggMethod::Min => "minimum",
        AggMethod::Sum => "total",
        AggMethod::Avg => "average",
        AggMethod::Median => "median",
    }
}

fn truncate(text: String) -> String {
    if text.chars().count() <= MAX_CAPTION_CHARS {
        return text;
    }
    let mut out: String = text.chars().take(MAX_CAPTION_CHARS - 3).collect();
    out.push_str("...");
    out
}

fn records(n: usize) -> String {
    match n {
        1 => String::from("1 record"),
        n => format!("{n} records"),
    }
}

/// One sentence describing what a step did, filled from its result.
pub fn caption_op(op: &QdmrOp, value: &StepValue, ctx: &TranslateContext<'_>) -> String {
    let n = value.rows().len();
    let text = match op {
        QdmrOp::Select { source, filter } => match filter {
            None => format!("Select {} from {}", records(n), source),
            Some(f) => format!("Select {} from {} whose {} {}", records(n), source, f.attribute, f.condition),
        },
        QdmrOp::Project { attribute, .. } => match ctx.kind_of(attribute) {
            Some(ColumnKind::Numerical) => format!("Use size to encode {attribute}"),
            Some(ColumnKind::Categorical) => format!("Use color to encode {attribute}"),
            Some(ColumnKind::Temporal) => format!("Use x-axis to encode {attribute}"),
            _ => format!("Show the {attribute} of each record"),
        },
        QdmrOp::Comparative {
            attribute, condition, ..
        } => format!(
            "Keep the {} whose {} {}",
            records(n),
            ctx.attribute_name(attribute),
            condition
        ),
        QdmrOp::Superlative {
            attribute, extremum, ..
        } => {
            let word = match extremum {
                Extremum::Max => "highest",
                Extremum::Min => "lowest",
            };
            format!("Keep the {} with the {} {}", records(n), word, ctx.attribute_name(attribute))
        }
        QdmrOp::Aggregate { records: r, method } => {
            let v = format_value(value.scalar().unwrap_or(0.0));
            match (method, ctx.aggregate_label(r.index())) {
                (AggMethod::Count, _) => format!("The total count of the following units is {v}"),
                (m, Some(label)) => format!("The {} value of {} is {}", method_word(*m), label, v),
                (m, None) => format!("The {} value is {}", method_word(*m), v),
            }
        }
        QdmrOp::Group {
            attribute, method, ..
        } => {
            let groups = match value {
                StepValue::Grouped { groups, .. } => groups.len(),
                _ => 0,
            };
            let tail = match method {
                AggMethod::Count => String::from("count each group"),
                m => format!("take the {} of each group", method_word(*m)),
            };
            format!("Group {} by {} into {} groups and {}", records(n), attribute, groups, tail)
        }
        QdmrOp::Union { .. } => format!("Combine both sets into {}", records(n)),
        QdmrOp::Discard { .. } => format!("Remove the matching records, leaving {}", records(n)),
        QdmrOp::Intersection { .. } => format!("Keep the {} found in both sets", records(n)),
        QdmrOp::Sort {
            attribute, order, ..
        } => {
            let word = match order {
                SortOrder::Asc => "ascending",
                SortOrder::Desc => "descending",
            };
            format!("Sort {} by {} in {} order", records(n), attribute, word)
        }
    };
    truncate(text)
}
