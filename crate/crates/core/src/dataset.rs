//! In-memory tables with inferred column kinds.
//!
//! Tables are built from already-split string cells; the `datamation` crate
//! owns the CSV reader. Once built a [`Table`] is immutable.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::same_name;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DatasetError {
    #[error("row {line} has {found} cells, expected {expected}")]
    MalformedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("column `{0}` has no non-null cells; its kind must be assigned explicitly")]
    AllNull(String),
    #[error("table or column name must not be empty")]
    EmptyName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numerical,
    Categorical,
    Temporal,
    Text,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numerical => "numerical",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Temporal => "temporal",
            ColumnKind::Text => "text",
        }
    }

    /// Kinds whose values support `<`, `>`, extrema and numeric scales.
    pub fn is_ordered(self) -> bool {
        matches!(self, ColumnKind::Numerical | ColumnKind::Temporal)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A year or an ISO calendar date. A bare year has `month == 0 && day == 0`,
/// so the derived ordering is chronological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Temporal {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl Temporal {
    pub fn year(year: i32) -> Self {
        Temporal {
            year,
            month: 0,
            day: 0,
        }
    }

    /// Parses a four-digit year (1000..=2999) or a `YYYY-MM-DD` date.
    pub fn parse(s: &str) -> Option<Temporal> {
        let s = s.trim();
        let bytes = s.as_bytes();
        let digits = |b: &[u8]| b.iter().all(u8::is_ascii_digit);
        let year_of = |b: &[u8]| -> Option<i32> {
            if b.len() == 4 && digits(b) && (b[0] == b'1' || b[0] == b'2') {
                core::str::from_utf8(b).ok()?.parse().ok()
            } else {
                None
            }
        };
        match bytes.len() {
            4 => year_of(bytes).map(Temporal::year),
            10 if bytes[4] == b'-' && bytes[7] == b'-' => {
                let year = year_of(&bytes[..4])?;
                if !digits(&bytes[5..7]) || !digits(&bytes[8..10]) {
                    return None;
                }
                let month: u8 = s[5..7].parse().ok()?;
                let day: u8 = s[8..10].parse().ok()?;
                if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
                    return None;
                }
                Some(Temporal { year, month, day })
            }
            _ => None,
        }
    }

    /// Monotone numeric key, used for linear scales.
    pub fn ordinal(self) -> f64 {
        f64::from(self.year) * 10_000.0 + f64::from(self.month) * 100.0 + f64::from(self.day)
    }
}

fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ => {
            let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
            if leap {
                29
            } else {
                28
            }
        }
    }
}

impl fmt::Display for Temporal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.month == 0 {
            write!(f, "{:04}", self.year)
        } else {
            write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
        }
    }
}

/// Parses a finite decimal number.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.is_empty() || !s.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Empty, `NA` and `null` (any case) load as null.
pub fn is_null_text(s: &str) -> bool {
    let s = s.trim();
    s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("null")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Cell {
    Null,
    Number { value: f64, text: String },
    Date { value: Temporal, text: String },
    Text { text: String },
}

impl Cell {
    /// Parses `raw` under `kind`; anything that does not parse becomes null.
    pub fn parse(raw: &str, kind: ColumnKind) -> Cell {
        let raw = raw.trim();
        if is_null_text(raw) {
            return Cell::Null;
        }
        match kind {
            ColumnKind::Numerical => match parse_number(raw) {
                Some(value) => Cell::Number {
                    value,
                    text: raw.to_string(),
                },
                None => Cell::Null,
            },
            ColumnKind::Temporal => match Temporal::parse(raw) {
                Some(value) => Cell::Date {
                    value,
                    text: raw.to_string(),
                },
                None => Cell::Null,
            },
            ColumnKind::Categorical | ColumnKind::Text => Cell::Text {
                text: raw.to_string(),
            },
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Cell::Null)
    }

    /// The source text, or `None` for null.
    pub fn text(&self) -> Option<&str> {
        match self {
            Cell::Null => None,
            Cell::Number { text, .. } | Cell::Date { text, .. } | Cell::Text { text } => Some(text),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Number { value, .. } => Some(*value),
            _ => None,
        }
    }

    /// Key for ordering comparisons: numbers by value, dates chronologically.
    pub fn ordinal(&self) -> Option<f64> {
        match self {
            Cell::Number { value, .. } => Some(*value),
            Cell::Date { value, .. } => Some(value.ordinal()),
            _ => None,
        }
    }

    /// Identity key used for grouping and equality on categorical values.
    pub fn group_key(&self) -> Option<String> {
        match self {
            Cell::Null => None,
            Cell::Number { value, .. } => Some(crate::text::format_number(*value, 12)),
            Cell::Date { value, .. } => Some(value.to_string()),
            Cell::Text { text } => Some(crate::normalize_text(text)),
        }
    }

    /// Total order used by SORT: nulls last, then ordinal or normalized text.
    pub fn sort_cmp(&self, other: &Cell) -> Ordering {
        match (self.is_null(), other.is_null()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Greater,
            (false, true) => return Ordering::Less,
            _ => {}
        }
        match (self.ordinal(), other.ordinal()) {
            (Some(a), Some(b)) => a.partial_cmp(&b).unwrap_or(Ordering::Equal),
            _ => self.group_key().cmp(&other.group_key()),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text().unwrap_or(""))
    }
}

/// Stable row identifier assigned at load (the row's position in the file).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RowId(pub u32);

impl RowId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for RowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub id: RowId,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    name: String,
    columns: Vec<Column>,
    rows: Vec<Row>,
}

/// Classifies a column from its raw cells.
///
/// A kind wins when at least 95% of the non-null cells parse under it, with
/// temporal checked before numerical. Otherwise the column is categorical
/// when it has at most `max(20, 20% of rows)` distinct values, else text.
pub fn infer_column_kind<S: AsRef<str>>(cells: &[S]) -> Result<ColumnKind, DatasetError> {
    let non_null: Vec<&str> = cells
        .iter()
        .map(|c| c.as_ref().trim())
        .filter(|c| !is_null_text(c))
        .collect();
    if non_null.is_empty() {
        return Err(DatasetError::AllNull(String::new()));
    }
    let total = non_null.len();
    let share_ok = |hits: usize| hits * 100 >= total * 95;

    let temporal = non_null.iter().filter(|c| Temporal::parse(c).is_some()).count();
    if share_ok(temporal) {
        return Ok(ColumnKind::Temporal);
    }
    let numeric = non_null.iter().filter(|c| parse_number(c).is_some()).count();
    if share_ok(numeric) {
        return Ok(ColumnKind::Numerical);
    }
    let distinct: BTreeSet<&str> = non_null.iter().copied().collect();
    if distinct.len() * 5 <= core::cmp::max(100, cells.len()) {
        Ok(ColumnKind::Categorical)
    } else {
        Ok(ColumnKind::Text)
    }
}

impl Table {
    /// Builds a table from a header and string rows.
    ///
    /// `kinds` overrides inference per column (matched case-insensitively).
    /// Columns with no non-null cells and no override fail with `AllNull`.
    pub fn from_strings(
        name: &str,
        header: &[String],
        raw_rows: &[Vec<String>],
        kinds: &BTreeMap<String, ColumnKind>,
    ) -> Result<Table, DatasetError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(DatasetError::EmptyName);
        }
        let mut seen = BTreeSet::new();
        for col in header {
            let key = col.trim().to_lowercase();
            if key.is_empty() {
                return Err(DatasetError::EmptyName);
            }
            if !seen.insert(key) {
                return Err(DatasetError::DuplicateColumn(col.trim().to_string()));
            }
        }
        for (i, row) in raw_rows.iter().enumerate() {
            if row.len() != header.len() {
                return Err(DatasetError::MalformedRow {
                    line: i + 1,
                    expected: header.len(),
                    found: row.len(),
                });
            }
        }

        let mut columns = Vec::with_capacity(header.len());
        for (c, col) in header.iter().enumerate() {
            let col = col.trim();
            let explicit = kinds
                .iter()
                .find(|(k, _)| same_name(k, col))
                .map(|(_, kind)| *kind);
            let kind = match explicit {
                Some(kind) => kind,
                None => {
                    let cells: Vec<&str> = raw_rows.iter().map(|r| r[c].as_str()).collect();
                    infer_column_kind(&cells)
                        .map_err(|_| DatasetError::AllNull(col.to_string()))?
                }
            };
            columns.push(Column {
                name: col.to_string(),
                kind,
            });
        }

        let rows = raw_rows
            .iter()
            .enumerate()
            .map(|(i, raw)| Row {
                id: RowId(i as u32),
                cells: raw
                    .iter()
                    .zip(&columns)
                    .map(|(cell, col)| Cell::parse(cell, col.kind))
                    .collect(),
            })
            .collect();

        Ok(Table {
            name: name.to_string(),
            columns,
            rows,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row_ids(&self) -> impl Iterator<Item = RowId> + '_ {
        self.rows.iter().map(|r| r.id)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| same_name(&c.name, name))
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn is_named(&self, name: &str) -> bool {
        same_name(&self.name, name)
    }

    pub fn contains_row(&self, id: RowId) -> bool {
        id.index() < self.rows.len()
    }

    /// Panics if `row` is not a row of this table.
    pub fn cell(&self, row: RowId, column: usize) -> &Cell {
        &self.rows[row.index()].cells[column]
    }

    /// Header plus one string vector per row, nulls as empty strings.
    pub fn to_strings(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = self.columns.iter().map(|c| c.name.clone()).collect();
        let rows = self
            .rows
            .iter()
            .map(|r| {
                r.cells
                    .iter()
                    .map(|c| c.text().unwrap_or("").to_string())
                    .collect()
            })
            .collect();
        (header, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn infer_examples() {
        assert_eq!(infer_column_kind(&["1999", "2000", "2001"]), Ok(ColumnKind::Temporal));
        assert_eq!(infer_column_kind(&["3.5", "2.0", "7"]), Ok(ColumnKind::Numerical));
        assert_eq!(infer_column_kind(&["CS", "EE", "CS"]), Ok(ColumnKind::Categorical));
        assert_eq!(
            infer_column_kind(&["", "NA", "null"]),
            Err(DatasetError::AllNull(String::new()))
        );
    }

    #[test]
    fn infer_thresholds() {
        // 19 of 20 years is exactly 95%.
        let mut cells: Vec<String> = (0..19).map(|i| (1990 + i).to_string()).collect();
        cells.push("n/a-ish".into());
        assert_eq!(infer_column_kind(&cells), Ok(ColumnKind::Temporal));
        cells.push("junk".into());
        assert_ne!(infer_column_kind(&cells), Ok(ColumnKind::Temporal));

        let many: Vec<String> = (0..30).map(|i| alloc::format!("name{i}")).collect();
        assert_eq!(infer_column_kind(&many), Ok(ColumnKind::Text));
        let dates = ["2013-05-01", "2013-05-02", "2012-02-29"];
        assert_eq!(infer_column_kind(&dates), Ok(ColumnKind::Temporal));
        assert_eq!(infer_column_kind(&["2013-02-30", "x"]), Ok(ColumnKind::Categorical));
        assert_eq!(infer_column_kind(&["180", "95", "240"]), Ok(ColumnKind::Numerical));
    }

    #[test]
    fn temporal_parsing() {
        assert_eq!(Temporal::parse("2000"), Some(Temporal::year(2000)));
        assert_eq!(Temporal::parse("3504"), None);
        assert_eq!(Temporal::parse("0999"), None);
        assert!(Temporal::parse("2000-02-29").is_some());
        assert!(Temporal::parse("1900-02-29").is_none());
        assert!(Temporal::year(2000) < Temporal::parse("2000-01-01").unwrap());
        assert_eq!(Temporal::parse("2013-05-01").unwrap().to_string(), "2013-05-01");
    }

    #[test]
    fn table_shape_errors() {
        let header = strings(&["name", "birth_year", "major"]);
        let bad = vec![strings(&["Ann", "2000"])];
        assert_eq!(
            Table::from_strings("students", &header, &bad, &BTreeMap::new()),
            Err(DatasetError::MalformedRow {
                line: 1,
                expected: 3,
                found: 2
            })
        );
        let dup = strings(&["name", "Name"]);
        assert!(matches!(
            Table::from_strings("t", &dup, &[], &BTreeMap::new()),
            Err(DatasetError::DuplicateColumn(_))
        ));
    }

    #[test]
    fn nulls_and_overrides() {
        let header = strings(&["a", "b"]);
        let rows = vec![strings(&["1", "NA"]), strings(&["x", ""])];
        assert!(matches!(
            Table::from_strings("t", &header, &rows, &BTreeMap::new()),
            Err(DatasetError::AllNull(c)) if c == "b"
        ));
        let mut kinds = BTreeMap::new();
        kinds.insert("B".to_string(), ColumnKind::Text);
        kinds.insert("a".to_string(), ColumnKind::Numerical);
        let t = Table::from_strings("t", &header, &rows, &kinds).unwrap();
        assert_eq!(t.columns()[1].kind, ColumnKind::Text);
        assert_eq!(t.cell(RowId(1), 0), &Cell::Null);
        assert!(t.cell(RowId(0), 1).is_null());
    }

    #[test]
    fn sort_order_puts_nulls_last() {
        let a = Cell::parse("3", ColumnKind::Numerical);
        let b = Cell::parse("10", ColumnKind::Numerical);
        assert_eq!(a.sort_cmp(&b), Ordering::Less);
        assert_eq!(Cell::Null.sort_cmp(&a), Ordering::Greater);
        let x = Cell::parse("b", ColumnKind::Categorical);
        let y = Cell::parse("A", ColumnKind::Categorical);
        assert_eq!(x.sort_cmp(&y), Ordering::Greater);
    }
}
