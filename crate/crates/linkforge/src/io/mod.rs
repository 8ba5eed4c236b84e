//! Documents, realization dumps and trace export.

pub mod document;
pub mod export;
pub mod rebuild;

use thiserror::Error;

pub use document::{load, save, to_canonical_json, FunctionalBlock, LinkageDocument, Provenance, RealizationSet, FORMAT_VERSION};
pub use export::{export_trace, TraceFormat};
pub use rebuild::{compiled_document, complex_document, rebuild, set_document, Rebuilt};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IoError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("unsupported format_version {0} (this build reads version 1)")]
    UnsupportedVersion(u64),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Linkage(#[from] crate::linkage::LinkageError),
}
