//! CSV ingestion, canonical persistence, a command line and an HTTP service
//! around the `datamation-core` engine.

#![forbid(unsafe_code)]

pub mod canonical;
pub mod cli;
pub mod csv_io;
pub mod http;
pub mod session;
pub mod store;

pub use canonical::{canonical_json, doc_id};
pub use csv_io::{load_table, read_table, LoadError, LoadOptions};
pub use session::{Edit, EditError, Session};
pub use store::{DataDir, SharedLedger, StoreError};
