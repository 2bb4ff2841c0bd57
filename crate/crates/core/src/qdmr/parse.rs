use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{
    AggMethod, Attribute, ColumnFilter, Comparator, Condition, Extremum, OpKind, Pipeline,
    Provenance, QdmrOp, SortOrder, StepRef,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {reason}")]
    SyntaxError { line: usize, reason: String },
    #[error("line {line}: step #{step} references #{target}, which is not an earlier step")]
    ForwardReference {
        line: usize,
        step: usize,
        target: usize,
    },
    #[error("line {line}: unknown operator `{name}`")]
    UnknownOperator { line: usize, name: String },
    #[error("line {line}: {op} takes {expected} arguments, found {found}")]
    ArityMismatch {
        line: usize,
        op: OpKind,
        expected: &'static str,
        found: usize,
    },
    #[error("script contains no steps")]
    Empty,
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::SyntaxError { line, .. }
            | ParseError::ForwardReference { line, .. }
            | ParseError::UnknownOperator { line, .. }
            | ParseError::ArityMismatch { line, .. } => Some(*line),
            ParseError::Empty => None,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ParseError::SyntaxError { .. } => "SyntaxError",
            ParseError::ForwardReference { .. } => "ForwardReference",
            ParseError::UnknownOperator { .. } => "UnknownOperator",
            ParseError::ArityMismatch { .. } => "ArityMismatch",
            ParseError::Empty => "SyntaxError",
        }
    }
}

/// Which step references a script may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefPolicy {
    /// Only strictly earlier steps, as in a runnable pipeline.
    Backward,
    /// Any step of the script, as in a draft awaiting reordering.
    AllowForward,
}

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Str(String),
    Ref(StepRef),
    Ident(String),
}

impl Arg {
    fn describe(&self) -> &'static str {
        match self {
            Arg::Str(_) => "a quoted string",
            Arg::Ref(_) => "a step reference",
            Arg::Ident(_) => "a keyword",
        }
    }
}

fn syntax(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::SyntaxError {
        line,
        reason: reason.into(),
    }
}

/// Parses a script into a pipeline with backward references only.
pub fn parse_pipeline(text: &str) -> Result<Pipeline, ParseError> {
    let steps = parse_steps(text, RefPolicy::Backward)?;
    Pipeline::new(steps, Provenance::UserEdited)
}

/// Parses a script into its operators, checking references under `policy`.
pub fn parse_steps(text: &str, policy: RefPolicy) -> Result<Vec<QdmrOp>, ParseError> {
    let mut steps = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let stmt = raw.trim();
        if stmt.is_empty() || stmt.starts_with("--") {
            continue;
        }
        let rest = stmt
            .strip_prefix('#')
            .ok_or_else(|| syntax(line, "statement must start with `#k =`"))?;
        let (number, expr) = rest
            .split_once('=')
            .ok_or_else(|| syntax(line, "missing `=` after step number"))?;
        let k: usize = number
            .trim()
            .parse()
            .map_err(|_| syntax(line, "step number must be a positive integer"))?;
        if k != steps.len() + 1 {
            return Err(syntax(
                line,
                alloc::format!("expected step #{}, found #{k}", steps.len() + 1),
            ));
        }
        let op = parse_expr(expr, line)?;
        if policy == RefPolicy::Backward {
            for r in op.refs() {
                if r.0 == 0 || r.0 >= k {
                    return Err(ParseError::ForwardReference {
                        line,
                        step: k,
                        target: r.0,
                    });
                }
            }
        }
        steps.push(op);
        lines.push(line);
    }
    if steps.is_empty() {
        return Err(ParseError::Empty);
    }
    if policy == RefPolicy::AllowForward {
        let n = steps.len();
        for (i, op) in steps.iter().enumerate() {
            for r in op.refs() {
                if r.0 == 0 || r.0 > n {
                    return Err(ParseError::ForwardReference {
                        line: lines[i],
                        step: i + 1,
                        target: r.0,
                    });
                }
            }
        }
    }
    Ok(steps)
}

/// Parses a single `KIND(args)` expression.
pub fn parse_op(expr: &str) -> Result<QdmrOp, ParseError> {
    parse_expr(expr, 1)
}

fn parse_expr(expr: &str, line: usize) -> Result<QdmrOp, ParseError> {
    let expr = expr.trim();
    let open = expr
        .find('(')
        .ok_or_else(|| syntax(line, "expected `KIND(...)`"))?;
    if !expr.ends_with(')') {
        return Err(syntax(line, "missing closing `)`"));
    }
    let name = expr[..open].trim();
    let kind = OpKind::ALL
        .into_iter()
        .find(|k| k.as_str().eq_ignore_ascii_case(name))
        .ok_or_else(|| ParseError::UnknownOperator {
            line,
            name: name.to_string(),
        })?;
    let args = split_args(&expr[open + 1..expr.len() - 1], line)?;
    build_op(kind, args, line)
}

fn split_args(body: &str, line: usize) -> Result<Vec<Arg>, ParseError> {
    let mut args = Vec::new();
    let mut chars = body.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let Some(&first) = chars.peek() else {
            if args.is_empty() {
                return Ok(args);
            }
            return Err(syntax(line, "trailing comma"));
        };
        let arg = if first == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    None => return Err(syntax(line, "unterminated string")),
                    Some('"') => break,
                    Some('\\') => match chars.next() {
                        Some('n') => s.push('\n'),
                        Some(c @ ('"' | '\\')) => s.push(c),
                        _ => return Err(syntax(line, "invalid escape in string")),
                    },
                    Some(c) => s.push(c),
                }
            }
            Arg::Str(s)
        } else {
            let mut token = String::new();
            while let Some(&c) = chars.peek() {
                if c == ',' || c.is_whitespace() {
                    break;
                }
                token.push(c);
                chars.next();
            }
            if let Some(n) = token.strip_prefix('#') {
                let n: usize = n
                    .parse()
                    .map_err(|_| syntax(line, alloc::format!("invalid step reference `{token}`")))?;
                Arg::Ref(StepRef(n))
            } else if !token.is_empty() && token.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                Arg::Ident(token.to_ascii_lowercase())
            } else {
                return Err(syntax(line, alloc::format!("unexpected argument `{token}`")));
            }
        };
        args.push(arg);
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None => return Ok(args),
            Some(',') => {}
            Some(c) => return Err(syntax(line, alloc::format!("expected `,`, found `{c}`"))),
        }
    }
}

/// Parses `"= 2000"`, `">= 3.5"`, `"!= CS"` and the Unicode forms.
pub fn parse_condition(text: &str) -> Option<Condition> {
    const SYMBOLS: [(&str, Comparator); 10] = [
        ("!=", Comparator::Ne),
        ("<>", Comparator::Ne),
        (">=", Comparator::Ge),
        ("<=", Comparator::Le),
        ("\u{2260}", Comparator::Ne),
        ("\u{2265}", Comparator::Ge),
        ("\u{2264}", Comparator::Le),
        ("=", Comparator::Eq),
        (">", Comparator::Gt),
        ("<", Comparator::Lt),
    ];
    let text = text.trim();
    let (comparator, rest) = SYMBOLS
        .iter()
        .find_map(|(sym, cmp)| text.strip_prefix(sym).map(|rest| (*cmp, rest)))?;
    let rest = rest.trim();
    if rest.is_empty() {
        return None;
    }
    Some(Condition::new(comparator, rest))
}

fn build_op(kind: OpKind, args: Vec<Arg>, line: usize) -> Result<QdmrOp, ParseError> {
    let arity = |expected: &'static str| ParseError::ArityMismatch {
        line,
        op: kind,
        expected,
        found: args.len(),
    };
    let want = |arg: &Arg, what: &str| {
        syntax(
            line,
            alloc::format!("{kind} expects {what}, found {}", arg.describe()),
        )
    };
    let string = |arg: &Arg, what: &str| match arg {
        Arg::Str(s) if !s.trim().is_empty() => Ok(s.trim().to_string()),
        other => Err(want(other, what)),
    };
    let step = |arg: &Arg| match arg {
        Arg::Ref(r) if r.0 > 0 => Ok(*r),
        Arg::Ref(_) => Err(syntax(line, "step references start at #1")),
        other => Err(want(other, "a step reference")),
    };
    let attribute = |arg: &Arg| match arg {
        Arg::Ref(_) => step(arg).map(Attribute::Step),
        Arg::Str(_) => string(arg, "a column name").map(Attribute::Column),
        other => Err(want(other, "a step reference or column name")),
    };
    let condition = |arg: &Arg| match arg {
        Arg::Str(s) => parse_condition(s).ok_or_else(|| {
            syntax(line, alloc::format!("invalid condition `{s}`; expected e.g. \"= 2000\""))
        }),
        other => Err(want(other, "a quoted condition")),
    };
    let method = |arg: &Arg| match arg {
        Arg::Ident(s) => AggMethod::parse(s)
            .ok_or_else(|| syntax(line, alloc::format!("unknown aggregation method `{s}`"))),
        other => Err(want(other, "an aggregation method")),
    };

    match kind {
        OpKind::Select => match args.as_slice() {
            [source] => Ok(QdmrOp::Select {
                source: string(source, "a table name")?,
                filter: None,
            }),
            [source, attr, cond] => Ok(QdmrOp::Select {
                source: string(source, "a table name")?,
                filter: Some(ColumnFilter {
                    attribute: string(attr, "a column name")?,
                    condition: condition(cond)?,
                }),
            }),
            _ => Err(arity("1 or 3")),
        },
        OpKind::Project => match args.as_slice() {
            [attr, records] => Ok(QdmrOp::Project {
                attribute: string(attr, "a column name")?,
                records: step(records)?,
            }),
            _ => Err(arity("2")),
        },
        OpKind::Comparative => match args.as_slice() {
            [records, attr, cond] => Ok(QdmrOp::Comparative {
                records: step(records)?,
                attribute: attribute(attr)?,
                condition: condition(cond)?,
            }),
            _ => Err(arity("3")),
        },
        OpKind::Superlative => match args.as_slice() {
            [records, attr, ext] => Ok(QdmrOp::Superlative {
                records: step(records)?,
                attribute: attribute(attr)?,
                extremum: match ext {
                    Arg::Ident(s) if s == "max" => Extremum::Max,
                    Arg::Ident(s) if s == "min" => Extremum::Min,
                    other => return Err(want(other, "`max` or `min`")),
                },
            }),
            _ => Err(arity("3")),
        },
        OpKind::Aggregate => match args.as_slice() {
            [m @ Arg::Ident(_), records] | [records @ Arg::Ref(_), m] => Ok(QdmrOp::Aggregate {
                records: step(records)?,
                method: method(m)?,
            }),
            [other, _] => Err(want(other, "an aggregation method")),
            _ => Err(arity("2")),
        },
        OpKind::Group => match args.as_slice() {
            [m, records, attr] => Ok(QdmrOp::Group {
                records: step(records)?,
                attribute: string(attr, "a column name")?,
                method: method(m)?,
            }),
            _ => Err(arity("3")),
        },
        OpKind::Union | OpKind::Discard | OpKind::Intersection => match args.as_slice() {
            [a, b] => {
                let (left, right) = (step(a)?, step(b)?);
                Ok(match kind {
                    OpKind::Union => QdmrOp::Union { left, right },
                    OpKind::Discard => QdmrOp::Discard { left, right },
                    _ => QdmrOp::Intersection { left, right },
                })
            }
            _ => Err(arity("2")),
        },
        OpKind::Sort => {
            let (records, attr, order) = match args.as_slice() {
                [records, attr] => (records, attr, SortOrder::Asc),
                [records, attr, order] => (
                    records,
                    attr,
                    match order {
                        Arg::Ident(s) if s == "asc" => SortOrder::Asc,
                        Arg::Ident(s) if s == "desc" => SortOrder::Desc,
                        other => return Err(want(other, "`asc` or `desc`")),
                    },
                ),
                _ => return Err(arity("2 or 3")),
            };
            Ok(QdmrOp::Sort {
                records: step(records)?,
                attribute: string(attr, "a column name")?,
                order,
            })
        }
    }
}
