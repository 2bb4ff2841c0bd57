//! Datamation engine core.
//!
//! Turns a table plus a data question into a QDMR pipeline, executes it, and
//! compiles the intermediate results into keyframes and transition plans for
//! an animated unit visualization. Everything here is pure computation over
//! in-memory values; CSV parsing, persistence and serving live in the
//! `datamation` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod compile;
pub mod dataset;
pub mod decompose;
pub mod doc;
pub mod exec;
pub mod layout;
pub mod linearize;
pub mod playback;
pub mod qdmr;
mod text;

pub use compile::{compile_datamation, CompileError, CompileOptions};
pub use dataset::{Cell, Column, ColumnKind, DatasetError, RowId, Table, Temporal};
pub use decompose::{decompose, DecomposeError, FeedbackRecord, FeedbackStore};
pub use doc::DatamationDoc;
pub use exec::{execute_pipeline, ExecError, StepValue};
pub use linearize::{linearize_query, LinearizedQuery, Token};
pub use qdmr::{parse_pipeline, validate_pipeline, Pipeline, QdmrOp};
pub use text::{normalize_text, tokenize_words};
