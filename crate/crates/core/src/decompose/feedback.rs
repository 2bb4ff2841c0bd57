//! User corrections keyed by normalized query and dataset.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::DecomposeError;
use crate::dataset::Table;
use crate::qdmr::{parse_pipeline, validate_pipeline, Pipeline, Provenance};
use crate::text::normalize_text;

/// One correction as persisted: scripts are stored as text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub query_key: String,
    pub dataset: String,
    pub original: String,
    pub corrected: String,
    pub created_at: u64,
}

fn key(query_key: &str, dataset: &str) -> (String, String) {
    (String::from(query_key), dataset.trim().to_lowercase())
}

/// Latest correction per (query key, dataset).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeedbackStore {
    entries: BTreeMap<(String, String), (FeedbackRecord, Pipeline)>,
}

impl FeedbackStore {
    pub fn new() -> FeedbackStore {
        FeedbackStore::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds a record, replacing any earlier one for the same key. A record
    /// whose corrected script equals the stored one leaves the store as is.
    pub fn insert(&mut self, record: FeedbackRecord) -> Result<(), DecomposeError> {
        let corrected = parse_pipeline(&record.corrected)
            .map_err(|e| DecomposeError::MalformedRecord(alloc::format!("{e}")))?
            .with_provenance(Provenance::UserEdited);
        let k = key(&record.query_key, &record.dataset);
        if let Some((existing, _)) = self.entries.get(&k) {
            if existing.corrected == record.corrected {
                return Ok(());
            }
        }
        self.entries.insert(k, (record, corrected));
        Ok(())
    }

    /// Builds a store from records in log order; later records win and
    /// unparseable ones are returned separately.
    pub fn from_records(records: impl IntoIterator<Item = FeedbackRecord>) -> (FeedbackStore, Vec<DecomposeError>) {
        let mut store = FeedbackStore::new();
        let mut rejected = Vec::new();
        for r in records {
            if let Err(e) = store.insert(r) {
                rejected.push(e);
            }
        }
        (store, rejected)
    }

    pub fn get(&self, query_key: &str, dataset: &str) -> Option<&FeedbackRecord> {
        self.entries.get(&key(query_key, dataset)).map(|(r, _)| r)
    }

    /// The corrected pipeline for a query key on a dataset.
    pub fn lookup(&self, query_key: &str, dataset: &str) -> Option<&Pipeline> {
        self.entries.get(&key(query_key, dataset)).map(|(_, p)| p)
    }

    pub fn records(&self) -> impl Iterator<Item = &FeedbackRecord> {
        self.entries.values().map(|(r, _)| r)
    }
}

/// Records a user's correction of a decomposition. The correction must
/// validate against the table; on failure the store is unchanged.
pub fn record_feedback(
    store: &mut FeedbackStore,
    query: &str,
    table: &Table,
    original: &Pipeline,
    corrected: &Pipeline,
    created_at: u64,
) -> Result<FeedbackRecord, DecomposeError> {
    validate_pipeline(corrected, table).map_err(DecomposeError::InvalidCorrection)?;
    let record = FeedbackRecord {
        query_key: normalize_text(query),
        dataset: String::from(table.name()),
        original: original.to_script(),
        corrected: corrected.to_script(),
        created_at,
    };
    store.insert(record.clone())?;
    Ok(record)
}
