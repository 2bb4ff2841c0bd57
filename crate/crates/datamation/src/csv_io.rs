//! Reading CSV files into tables and writing step results back out.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use datamation_core::dataset::is_null_text;
use datamation_core::{ColumnKind, DatasetError, RowId, StepValue, Table};

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Table name; defaults to the file stem.
    pub name: Option<String>,
    /// Per-column kind overrides.
    pub kinds: BTreeMap<String, ColumnKind>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at line {line}: {reason}")]
    MalformedCsv { line: u64, reason: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("the CSV has no header row")]
    Empty,
}

impl LoadError {
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::Io { .. } => "Io",
            LoadError::MalformedCsv { .. } => "MalformedCsv",
            LoadError::Dataset(DatasetError::MalformedRow { .. }) => "MalformedCsv",
            LoadError::Dataset(_) => "InvalidDataset",
            LoadError::Empty => "MalformedCsv",
        }
    }
}

fn csv_error(e: csv::Error) -> LoadError {
    let line = e.position().map_or(0, |p| p.line());
    LoadError::MalformedCsv {
        line,
        reason: e.to_string(),
    }
}

/// Parses CSV text into a table named `name`.
///
/// Columns whose cells are all null load as text unless `kinds` says otherwise.
pub fn read_table<R: Read>(reader: R, name: &str, kinds: &BTreeMap<String, ColumnKind>) -> Result<Table, LoadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(LoadError::Empty);
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        if record.len() != header.len() {
            return Err(LoadError::MalformedCsv {
                line: record.position().map_or(0, |p| p.line()),
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        rows.push(record.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let mut kinds = kinds.clone();
    for (c, col) in header.iter().enumerate() {
        let named = kinds.keys().any(|k| k.trim().eq_ignore_ascii_case(col));
        if !named && rows.iter().all(|r: &Vec<String>| is_null_text(&r[c])) {
            kinds.insert(col.clone(), ColumnKind::Text);
        }
    }
    Ok(Table::from_strings(name, &header, &rows, &kinds)?)
}

/// Loads a CSV file.
pub fn load_table(path: &Path, opts: &LoadOptions) -> Result<Table, LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = opts.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map_or_else(|| "table".to_string(), |s| s.to_string_lossy().into_owned())
    });
    read_table(file, &name, &opts.kinds)
}

/// Writes a header and rows as CSV.
pub fn write_rows<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(std::io::Error::other)?;
    for r in rows {
        w.write_record(r).map_err(std::io::Error::other)?;
    }
    w.flush()
}

/// Writes a whole table as CSV.
pub fn write_table<W: Write>(out: W, table: &Table) -> std::io::Result<()> {
    let (header, rows) = table.to_strings();
    write_rows(out, &header, &rows)
}

fn number(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        Some(v) => format!("{v}"),
    }
}

fn record_rows(table: &Table, ids: &[RowId]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["row".to_string()];
    header.extend(table.columns().iter().map(|c| c.name.clone()));
    let rows = ids
        .iter()
        .map(|&id| {
            let mut r = vec![id.to_string()];
            r.extend((0..table.columns().len()).map(|c| table.cell(id, c).to_string()));
            r
        })
        .collect();
    (header, rows)
}

/// The rows a step produced, as a header plus string rows.
pub fn step_table(value: &StepValue, table: &Table) -> (Vec<String>, Vec<Vec<String>>) {
    match value {
        StepValue::RecordSet { rows } | StepValue::Ordered { rows, .. } => record_rows(table, rows),
        StepValue::ColumnView {
            rows,
            attribute,
            values,
        } => (
            vec!["row".to_string(), attribute.clone()],
            rows.iter()
                .zip(values)
                .map(|(id, v)| vec![id.to_string(), v.to_string()])
                .collect(),
        ),
        StepValue::Grouped {
            attribute,
            method,
            groups,
            ..
        } => (
            vec![attribute.clone(), "rows".to_string(), method.as_str().to_string()],
            groups
                .iter()
                .map(|g| vec![g.key.to_string(), g.rows.len().to_string(), number(g.value)])
                .collect(),
        ),
        StepValue::Scalar { value, method, .. } => (vec![method.as_str().to_string()], vec![vec![number(Some(*value))]]),
    }
}

/// Formats a header and rows as an aligned plain-text table.
pub fn text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        parts.join(" | ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("-+-"));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}
