//! The on-disk data directory: datasets, compiled documents, session edit
//! logs and the feedback ledger.
//!
//! ```text
//! <root>/datasets/<id>.csv   <root>/datasets/<id>.json
//! <root>/docs/<id>.json      <root>/sessions/<id>.json
//! <root>/ledger.jsonl
//! ```

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use datamation_core::decompose::record_feedback;
use datamation_core::{ColumnKind, DatamationDoc, DecomposeError, FeedbackRecord, FeedbackStore, Pipeline, Table};
use serde::{Deserialize, Serialize};

use crate::canonical::{canonical_json, doc_id};
use crate::csv_io::{read_table, write_table, LoadError};
use crate::session::Edit;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("no {kind} with id {id}")]
    NotFound { kind: &'static str, id: String },
    #[error(transparent)]
    Feedback(#[from] DecomposeError),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } => "Io",
            StoreError::Json { .. } => "CorruptFile",
            StoreError::Load(e) => e.code(),
            StoreError::NotFound { .. } => "NotFound",
            StoreError::Feedback(e) => e.code(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

/// Stored description of an uploaded dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub id: String,
    pub name: String,
    pub kinds: BTreeMap<String, ColumnKind>,
}

/// A session as persisted: its identity plus the edit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub dataset_id: String,
    pub history: Vec<Edit>,
}

#[derive(Debug, Clone)]
pub struct DataDir {
    root: PathBuf,
}

impl DataDir {
    /// Opens a data directory, creating its layout if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<DataDir, StoreError> {
        let root = root.into();
        for sub in ["datasets", "docs", "sessions"] {
            let p = root.join(sub);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        Ok(DataDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.root.join("ledger.jsonl")
    }

    fn file(&self, kind: &'static str, id: &str, ext: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::NotFound { kind, id: id.to_string() });
        }
        let dir = match kind {
            "dataset" => "datasets",
            "datamation" => "docs",
            _ => "sessions",
        };
        Ok(self.root.join(dir).join(format!("{id}.{ext}")))
    }

    fn existing(&self, kind: &'static str, id: &str, ext: &str) -> Result<PathBuf, StoreError> {
        let path = self.file(kind, id, ext)?;
        if path.is_file() {
            Ok(path)
        } else {
            Err(StoreError::NotFound { kind, id: id.to_string() })
        }
    }

    /// Stores a table under a fresh id, recording its column kinds so a
    /// reload reproduces it exactly.
    pub fn put_dataset(&self, table: &Table) -> Result<String, StoreError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut csv = Vec::new();
        let path = self.file("dataset", &id, "csv")?;
        write_table(&mut csv, table).map_err(io_err(&path))?;
        write_atomic(&path, &csv)?;
        let meta = DatasetMeta {
            id: id.clone(),
            name: table.name().to_string(),
            kinds: table.columns().iter().map(|c| (c.name.clone(), c.kind)).collect(),
        };
        let json = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
        write_atomic(&self.file("dataset", &id, "json")?, &json)?;
        Ok(id)
    }

    pub fn dataset_meta(&self, id: &str) -> Result<DatasetMeta, StoreError> {
        read_json(&self.existing("dataset", id, "json")?)
    }

    pub fn load_dataset(&self, id: &str) -> Result<Table, StoreError> {
        let meta = self.dataset_meta(id)?;
        let path = self.existing("dataset", id, "csv")?;
        let file = fs::File::open(&path).map_err(io_err(&path))?;
        Ok(read_table(file, &meta.name, &meta.kinds)?)
    }

    /// Stores a document as canonical JSON under its content hash.
    pub fn put_doc(&self, doc: &DatamationDoc) -> Result<(String, String), StoreError> {
        let text = canonical_json(doc).expect("documents serialize");
        let id = doc_id(&text);
        write_atomic(&self.file("datamation", &id, "json")?, text.as_bytes())?;
        Ok((id, text))
    }

    /// The stored canonical text of a document.
    pub fn doc_text(&self, id: &str) -> Result<String, StoreError> {
        let path = self.existing("datamation", id, "json")?;
        fs::read_to_string(&path).map_err(io_err(&path))
    }

    pub fn load_doc(&self, id: &str) -> Result<DatamationDoc, StoreError> {
        read_json(&self.existing("datamation", id, "json")?)
    }

    pub fn put_session(&self, record: &SessionRecord) -> Result<(), StoreError> {
        let json = serde_json::to_vec_pretty(record).expect("sessions serialize");
        write_atomic(&self.file("session", &record.id, "json")?, &json)
    }

    pub fn load_session(&self, id: &str) -> Result<SessionRecord, StoreError> {
        read_json(&self.existing("session", id, "json")?)
    }
}

/// Reads a ledger log; a missing file is an empty ledger. Lines that do not
/// parse are skipped and reported.
pub fn read_ledger(path: &Path) -> Result<(FeedbackStore, Vec<String>), StoreError> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((FeedbackStore::new(), Vec::new())),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<FeedbackRecord>(&line) {
            Ok(r) => records.push(r),
            Err(e) => skipped.push(format!("line {}: {e}", i + 1)),
        }
    }
    let (store, rejected) = FeedbackStore::from_records(records);
    skipped.extend(rejected.iter().map(ToString::to_string));
    Ok((store, skipped))
}

/// Appends one record as a single JSON line.
pub fn append_ledger(path: &Path, record: &FeedbackRecord) -> Result<(), StoreError> {
    let mut line = serde_json::to_string(record).expect("records serialize");
    line.push('\n');
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(line.as_bytes()).map_err(io_err(path))?;
    f.sync_data().map_err(io_err(path))
}

/// A feedback ledger shared between request handlers. Readers take a
/// snapshot; writers append to the log and then swap in the new state.
#[derive(Debug)]
pub struct SharedLedger {
    path: Option<PathBuf>,
    state: RwLock<Arc<FeedbackStore>>,
}

impl SharedLedger {
    pub fn in_memory() -> SharedLedger {
        SharedLedger {
            path: None,
            state: RwLock::new(Arc::new(FeedbackStore::new())),
        }
    }

    /// Loads the log at `path`, which later records are appended to.
    pub fn open(path: &Path) -> Result<SharedLedger, StoreError> {
        let (store, _) = read_ledger(path)?;
        Ok(SharedLedger {
            path: Some(path.to_path_buf()),
            state: RwLock::new(Arc::new(store)),
        })
    }

    pub fn snapshot(&self) -> Arc<FeedbackStore> {
        self.state.read().expect("ledger lock").clone()
    }

    /// Validates and records a correction. The log line is written before
    /// the in-memory state changes; nothing changes on failure.
    pub fn record(
        &self,
        query: &str,
        table: &Table,
        original: &Pipeline,
        corrected: &Pipeline,
        created_at: u64,
    ) -> Result<FeedbackRecord, StoreError> {
        let mut guard = self.state.write().expect("ledger lock");
        let mut next = FeedbackStore::clone(&guard);
        let record = record_feedback(&mut next, query, table, original, corrected, created_at)?;
        if let Some(path) = &self.path {
            append_ledger(path, &record)?;
        }
        *guard = Arc::new(next);
        Ok(record)
    }
}

/// Milliseconds since the Unix epoch.
pub fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}
