//! Keyword-anchored patterns that turn a linearized query into a pipeline.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, Table, Temporal};
use crate::linearize::LinearizedQuery;
use crate::qdmr::{
    validate_pipeline, AggMethod, Attribute, Comparator, Condition, Extremum, Pipeline, Provenance, QdmrOp,
    SortOrder, StepRef,
};

/// Numerical key columns with at most this many distinct values are
/// filtered through a GROUP, others through a direct COMPARATIVE.
const MAX_GROUPED_FILTER_KEYS: usize = 12;

/// Patterns in priority order; a lower id wins ties on anchor length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternId {
    Sort,
    Group,
    Superlative,
    Aggregate,
    Count,
    FilterList,
}

impl PatternId {
    pub const ALL: [PatternId; 6] = [
        PatternId::Sort,
        PatternId::Group,
        PatternId::Superlative,
        PatternId::Aggregate,
        PatternId::Count,
        PatternId::FilterList,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PatternId::Sort => "sort",
            PatternId::Group => "group",
            PatternId::Superlative => "superlative",
            PatternId::Aggregate => "aggregate",
            PatternId::Count => "count",
            PatternId::FilterList => "filter-list",
        }
    }
}

const SORT_ANCHORS: [&str; 8] = [
    "sorted by", "sort by", "ordered by", "order by", "ranked by", "rank by", "sorted on", "arranged by",
];
const COUNT_LEADERS: [&str; 5] = ["how many", "number of", "count of", "count the", "count"];
const GROUPERS: [&str; 4] = ["per", "for each", "in each", "by"];
const LIST_LEADERS: [&str; 8] = ["which", "show", "list", "find", "what are", "display", "give me", "get"];
const PICK_LEADERS: [&str; 4] = ["which", "who", "find the", "show the"];

const AGG_WORDS: [(&str, AggMethod); 14] = [
    ("maximum", AggMethod::Max),
    ("max", AggMethod::Max),
    ("highest", AggMethod::Max),
    ("largest", AggMethod::Max),
    ("greatest", AggMethod::Max),
    ("minimum", AggMethod::Min),
    ("min", AggMethod::Min),
    ("lowest", AggMethod::Min),
    ("smallest", AggMethod::Min),
    ("average", AggMethod::Avg),
    ("mean", AggMethod::Avg),
    ("total", AggMethod::Sum),
    ("sum of", AggMethod::Sum),
    ("median", AggMethod::Median),
];

const EXTREMUM_WORDS: [(&str, Extremum); 16] = [
    ("highest", Extremum::Max),
    ("largest", Extremum::Max),
    ("most", Extremum::Max),
    ("maximum", Extremum::Max),
    ("max", Extremum::Max),
    ("biggest", Extremum::Max),
    ("greatest", Extremum::Max),
    ("longest", Extremum::Max),
    ("lowest", Extremum::Min),
    ("smallest", Extremum::Min),
    ("least", Extremum::Min),
    ("fewest", Extremum::Min),
    ("minimum", Extremum::Min),
    ("min", Extremum::Min),
    ("shortest", Extremum::Min),
    ("top", Extremum::Max),
];

const COMPARATOR_PHRASES: [(&str, Comparator); 19] = [
    ("no less than", Comparator::Ge),
    ("no more than", Comparator::Le),
    ("at least", Comparator::Ge),
    ("at most", Comparator::Le),
    ("less than", Comparator::Lt),
    ("fewer than", Comparator::Lt),
    ("smaller than", Comparator::Lt),
    ("lower than", Comparator::Lt),
    ("more than", Comparator::Gt),
    ("greater than", Comparator::Gt),
    ("higher than", Comparator::Gt),
    ("larger than", Comparator::Gt),
    ("equal to", Comparator::Eq),
    ("under", Comparator::Lt),
    ("below", Comparator::Lt),
    ("over", Comparator::Gt),
    ("above", Comparator::Gt),
    ("before", Comparator::Lt),
    ("after", Comparator::Gt),
];

const DESCENDING_WORDS: [&str; 4] = ["descending", "desc", "decreasing", "reverse"];

/// Anchor sequences of a pattern. Every phrase of a sequence must occur
/// in order; the score of a match is its total word count.
pub fn anchors(id: PatternId) -> Vec<Vec<&'static str>> {
    match id {
        PatternId::Sort => SORT_ANCHORS.iter().map(|a| vec![*a]).collect(),
        PatternId::Group => COUNT_LEADERS
            .iter()
            .copied()
            .chain(AGG_WORDS.iter().map(|(w, _)| *w))
            .flat_map(|lead| GROUPERS.iter().map(move |g| vec![lead, *g]))
            .collect(),
        PatternId::Superlative => PICK_LEADERS
            .iter()
            .flat_map(|lead| EXTREMUM_WORDS.iter().map(move |(w, _)| vec![*lead, *w]))
            .collect(),
        PatternId::Aggregate => AGG_WORDS
            .iter()
            .flat_map(|(w, _)| [vec![*w], vec![*w, "number of"]])
            .collect(),
        PatternId::Count => COUNT_LEADERS.iter().map(|a| vec![*a]).collect(),
        PatternId::FilterList => LIST_LEADERS.iter().map(|a| vec![*a]).collect(),
    }
}

fn phrase_words(phrase: &str) -> Vec<&str> {
    phrase.split(' ').collect()
}

/// First occurrence of `phrase` at or after `from`, as a word span.
fn find_phrase(words: &[&str], phrase: &str, from: usize) -> Option<(usize, usize)> {
    let p = phrase_words(phrase);
    if p.len() > words.len() {
        return None;
    }
    (from..=words.len() - p.len())
        .find(|&s| words[s..s + p.len()] == p[..])
        .map(|s| (s, s + p.len()))
}

/// A matched anchor sequence: the span of each phrase.
#[derive(Debug, Clone, PartialEq, Eq)]
struct AnchorMatch {
    phrases: Vec<&'static str>,
    spans: Vec<(usize, usize)>,
}

impl AnchorMatch {
    fn score(&self) -> usize {
        self.spans.iter().map(|(s, e)| e - s).sum()
    }
}

fn match_anchor(words: &[&str], anchor: &[&'static str]) -> Option<AnchorMatch> {
    let mut spans = Vec::with_capacity(anchor.len());
    let mut from = 0;
    for phrase in anchor {
        let span = find_phrase(words, phrase, from)?;
        from = span.1;
        spans.push(span);
    }
    Some(AnchorMatch {
        phrases: anchor.to_vec(),
        spans,
    })
}

/// Best anchor match of a pattern: highest score, then earliest start.
fn best_match(words: &[&str], id: PatternId) -> Option<AnchorMatch> {
    let mut best: Option<AnchorMatch> = None;
    for anchor in anchors(id) {
        if let Some(m) = match_anchor(words, &anchor) {
            let better = match &best {
                None => true,
                Some(b) => (m.score(), core::cmp::Reverse(m.spans[0].0)) > (b.score(), core::cmp::Reverse(b.spans[0].0)),
            };
            if better {
                best = Some(m);
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ColumnMention {
    name: String,
    kind: ColumnKind,
    start: usize,
    end: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Constraint {
    column: String,
    kind: ColumnKind,
    condition: Condition,
    start: usize,
    end: usize,
}

fn word_matches(word: &str, name: &str) -> bool {
    word == name
        || word.strip_suffix('s') == Some(name)
        || name.strip_suffix('s') == Some(word)
        || word.strip_suffix("es") == Some(name)
}

fn column_mentions(words: &[&str], table: &Table) -> Vec<ColumnMention> {
    let mut found = Vec::new();
    for column in table.columns() {
        let lower = column.name.to_lowercase();
        let parts: Vec<&str> = lower
            .split(|c: char| c == '_' || c == '-' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        if parts.is_empty() || parts.len() > words.len() {
            continue;
        }
        for s in 0..=words.len() - parts.len() {
            let hit = parts.iter().enumerate().all(|(i, p)| {
                if i + 1 == parts.len() {
                    word_matches(words[s + i], p)
                } else {
                    words[s + i] == *p
                }
            });
            if hit {
                found.push(ColumnMention {
                    name: column.name.clone(),
                    kind: column.kind,
                    start: s,
                    end: s + parts.len(),
                });
            }
        }
    }
    // Longest mention wins where mentions overlap.
    found.sort_by(|a, b| (a.start, b.end).cmp(&(b.start, a.end)));
    let mut kept: Vec<ColumnMention> = Vec::new();
    for m in found {
        if kept.iter().all(|k| m.end <= k.start || m.start >= k.end) {
            kept.push(m);
        }
    }
    kept.sort_by_key(|m| m.start);
    kept
}

fn is_literal(word: &str) -> bool {
    crate::dataset::parse_number(word).is_some() || Temporal::parse(word).is_some()
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Comparisons written as a phrase and a number, like "less than 6 cylinders".
fn numeric_constraints(words: &[&str], columns: &[ColumnMention], table: &Table) -> Vec<Constraint> {
    let mut out: Vec<Constraint> = Vec::new();
    let mut taken: Vec<(usize, usize)> = Vec::new();
    for (phrase, comparator) in COMPARATOR_PHRASES {
        let mut from = 0;
        while let Some((start, end)) = find_phrase(words, phrase, from) {
            from = end;
            if taken.iter().any(|t| overlaps(*t, (start, end))) {
                continue;
            }
            let Some(literal) = words.get(end).copied().filter(|w| is_literal(w)) else {
                continue;
            };
            let ordered = |m: &&ColumnMention| m.kind.is_ordered();
            let after = columns
                .iter()
                .filter(ordered)
                .find(|m| m.start > end && m.start <= end + 2);
            let before = columns
                .iter()
                .filter(ordered)
                .rfind(|m| m.end <= start && m.end + 3 >= start);
            let column = after.or(before).map(|m| (m.name.clone(), m.kind, m.start, m.end)).or_else(|| {
                if Temporal::parse(literal).is_some() {
                    table
                        .columns()
                        .iter()
                        .find(|c| c.kind == ColumnKind::Temporal)
                        .map(|c| (c.name.clone(), c.kind, start, start))
                } else {
                    None
                }
            });
            let Some((name, kind, cs, ce)) = column else {
                continue;
            };
            let span = (start.min(cs), (end + 1).max(ce));
            taken.push(span);
            out.push(Constraint {
                column: name,
                kind,
                condition: Condition::new(comparator, literal),
                start: span.0,
                end: span.1,
            });
        }
    }
    out
}

/// Equality constraints from table values the query mentions.
fn value_constraints(q: &LinearizedQuery, table: &Table, blocked: &[(usize, usize)]) -> Vec<Constraint> {
    let mut mentions: Vec<(usize, usize, usize, String, String, ColumnKind)> = q
        .value_mentions()
        .into_iter()
        .filter_map(|m| {
            let col = table.column_index(m.column)?;
            let kind = table.columns()[col].kind;
            matches!(kind, ColumnKind::Categorical | ColumnKind::Temporal).then(|| {
                (m.start, m.start + m.len, col, m.text.to_string(), table.columns()[col].name.clone(), kind)
            })
        })
        .filter(|m| blocked.iter().all(|b| !overlaps(*b, (m.0, m.1))))
        .collect();
    mentions.sort_by(|a, b| (a.0, b.1, a.2).cmp(&(b.0, a.1, b.2)));
    let mut out: Vec<Constraint> = Vec::new();
    for (start, end, _, text, column, kind) in mentions {
        if out.iter().any(|c| overlaps((c.start, c.end), (start, end))) {
            continue;
        }
        out.push(Constraint {
            column,
            kind,
            condition: Condition::new(Comparator::Eq, &text),
            start,
            end,
        });
    }
    out
}

struct Analysis<'q> {
    words: Vec<&'q str>,
    columns: Vec<ColumnMention>,
    constraints: Vec<Constraint>,
}

impl<'q> Analysis<'q> {
    fn new(q: &'q LinearizedQuery, table: &Table) -> Analysis<'q> {
        let words = q.words();
        let columns = column_mentions(&words, table);
        let mut constraints = numeric_constraints(&words, &columns, table);
        let blocked: Vec<(usize, usize)> = constraints.iter().map(|c| (c.start, c.end)).collect();
        constraints.extend(value_constraints(q, table, &blocked));
        constraints.sort_by_key(|c| c.start);
        Analysis {
            words,
            columns,
            constraints,
        }
    }

    /// First column mentioned in `[from, to)` outside every constraint.
    fn column_in(&self, from: usize, to: usize) -> Option<&ColumnMention> {
        self.columns.iter().find(|m| {
            m.start >= from
                && m.start < to
                && self.constraints.iter().all(|c| !overlaps((c.start, c.end), (m.start, m.end)))
        })
    }
}

struct Builder {
    steps: Vec<QdmrOp>,
}

impl Builder {
    fn new(table: &Table) -> Builder {
        Builder {
            steps: vec![QdmrOp::Select {
                source: table.name().to_string(),
                filter: None,
            }],
        }
    }

    fn push(&mut self, op: QdmrOp) -> StepRef {
        self.steps.push(op);
        StepRef(self.steps.len())
    }

    fn last(&self) -> StepRef {
        StepRef(self.steps.len())
    }

    /// Each constraint as a projection followed by a comparison against it.
    fn project_filters(&mut self, constraints: &[Constraint]) -> StepRef {
        let mut records = self.last();
        for c in constraints {
            let projected = self.push(QdmrOp::Project {
                attribute: c.column.clone(),
                records,
            });
            records = self.push(QdmrOp::Comparative {
                records,
                attribute: Attribute::Step(projected),
                condition: c.condition.clone(),
            });
        }
        records
    }

    /// Each constraint as a grouping followed by a comparison on its key,
    /// closed by intersecting with the full selection.
    fn group_filters(&mut self, constraints: &[Constraint], table: &Table) -> StepRef {
        let all = self.last();
        let mut records = all;
        let mut grouped = false;
        for c in constraints {
            let groupable = match c.kind {
                ColumnKind::Numerical => distinct_count(table, &c.column) <= MAX_GROUPED_FILTER_KEYS,
                _ => true,
            };
            let source = if groupable {
                grouped = true;
                self.push(QdmrOp::Group {
                    records,
                    attribute: c.column.clone(),
                    method: AggMethod::Count,
                })
            } else {
                records
            };
            records = self.push(QdmrOp::Comparative {
                records: source,
                attribute: Attribute::Column(c.column.clone()),
                condition: c.condition.clone(),
            });
        }
        if grouped {
            records = self.push(QdmrOp::Intersection {
                left: all,
                right: records,
            });
        }
        records
    }
}

fn distinct_count(table: &Table, column: &str) -> usize {
    let Some(col) = table.column_index(column) else {
        return 0;
    };
    table
        .row_ids()
        .filter_map(|id| table.cell(id, col).group_key())
        .collect::<BTreeSet<String>>()
        .len()
}

fn agg_method(phrase: &str) -> Option<AggMethod> {
    AGG_WORDS.iter().find(|(w, _)| *w == phrase).map(|(_, m)| *m)
}

fn extremum(phrase: &str) -> Option<Extremum> {
    EXTREMUM_WORDS.iter().find(|(w, _)| *w == phrase).map(|(_, e)| *e)
}

/// Attribute slots may sit this many words past their anchor.
const SLOT_WINDOW: usize = 4;

fn build(id: PatternId, m: &AnchorMatch, a: &Analysis<'_>, table: &Table) -> Option<Vec<QdmrOp>> {
    let mut b = Builder::new(table);
    let anchor_end = m.spans.last()?.1;
    match id {
        PatternId::Sort => {
            let column = a.column_in(anchor_end, anchor_end + SLOT_WINDOW)?;
            let records = b.group_filters(&a.constraints, table);
            let order = if a.words.iter().any(|w| DESCENDING_WORDS.contains(w)) {
                SortOrder::Desc
            } else {
                SortOrder::Asc
            };
            b.push(QdmrOp::Sort {
                records,
                attribute: column.name.clone(),
                order,
            });
        }
        PatternId::Group => {
            let (lead_start, lead_end) = m.spans[0];
            let (group_start, group_end) = m.spans[1];
            let key = a.column_in(group_end, group_end + SLOT_WINDOW - 1)?;
            let method = agg_method(m.phrases[0]);
            let records = b.group_filters(&a.constraints, table);
            match method {
                None => {
                    b.push(QdmrOp::Group {
                        records,
                        attribute: key.name.clone(),
                        method: AggMethod::Count,
                    });
                }
                Some(method) => {
                    let value = a.column_in(lead_end, group_start.max(lead_start + 1))?;
                    let projected = b.push(QdmrOp::Project {
                        attribute: value.name.clone(),
                        records,
                    });
                    b.push(QdmrOp::Group {
                        records: projected,
                        attribute: key.name.clone(),
                        method,
                    });
                }
            }
        }
        PatternId::Superlative => {
            let ext = extremum(m.phrases[1])?;
            let column = a.column_in(anchor_end, anchor_end + SLOT_WINDOW)?;
            let records = b.group_filters(&a.constraints, table);
            let projected = b.push(QdmrOp::Project {
                attribute: column.name.clone(),
                records,
            });
            b.push(QdmrOp::Superlative {
                records,
                attribute: Attribute::Step(projected),
                extremum: ext,
            });
        }
        PatternId::Aggregate => {
            let method = agg_method(m.phrases[0])?;
            let column = a.column_in(anchor_end, anchor_end + SLOT_WINDOW)?;
            let records = b.group_filters(&a.constraints, table);
            let projected = b.push(QdmrOp::Project {
                attribute: column.name.clone(),
                records,
            });
            b.push(QdmrOp::Aggregate {
                records: projected,
                method,
            });
        }
        PatternId::Count => {
            let records = b.project_filters(&a.constraints);
            b.push(QdmrOp::Aggregate {
                records,
                method: AggMethod::Count,
            });
        }
        PatternId::FilterList => {
            if a.constraints.is_empty() {
                return None;
            }
            b.group_filters(&a.constraints, table);
        }
    }
    Some(b.steps)
}

/// Matches the query against every pattern and returns the first pipeline
/// that builds and validates, trying patterns by descending anchor length
/// and then by id.
pub(crate) fn match_patterns(q: &LinearizedQuery, table: &Table) -> Option<(PatternId, Pipeline)> {
    let analysis = Analysis::new(q, table);
    let mut candidates: Vec<(PatternId, AnchorMatch)> = PatternId::ALL
        .iter()
        .filter_map(|id| best_match(&analysis.words, *id).map(|m| (*id, m)))
        .collect();
    candidates.sort_by(|(ia, ma), (ib, mb)| mb.score().cmp(&ma.score()).then(ia.cmp(ib)));
    candidates.into_iter().find_map(|(id, m)| {
        let steps = build(id, &m, &analysis, table)?;
        let pipeline = Pipeline::new(steps, Provenance::Decomposed).ok()?;
        validate_pipeline(&pipeline, table).ok()?;
        Some((id, pipeline))
    })
}
