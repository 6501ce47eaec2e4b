//! On-disk formats: plane files and stack manifests, dataset and centers
//! CSVs, model files, flat configs and provenance records.
//!
//! Floats in text formats are written with Rust's shortest round-trip
//! formatting, so every text artifact re-reads to identical bits.

mod config;
mod dataset;
mod model;
mod stack;

pub use config::{parse_config, ConfigMap};
pub use dataset::{Centers, DatasetFile, DatasetRow, Role};
pub use model::{layout_digest, read_model, write_model, ModelFile, MODEL_FORMAT_VERSION};
pub use stack::{decode_plane, encode_plane, read_plane, read_stack, write_plane, write_stack};

use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{context} line {line}: {msg}")]
    Parse { context: String, line: usize, msg: String },
    #[error("{context}: expected schema {expected}, found {found:?}")]
    Schema { context: String, expected: String, found: String },
    #[error("{context} line {line}: unknown key {key:?}")]
    UnknownKey { context: String, line: usize, key: String },
    #[error("{0}")]
    Invalid(String),
}

impl IoError {
    pub(crate) fn parse(context: &str, line: usize, msg: impl Into<String>) -> Self {
        IoError::Parse { context: context.to_string(), line, msg: msg.into() }
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    std::fs::write(path, bytes).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

/// Checks that the first line is `# schema: <expected>`.
pub(crate) fn expect_schema(context: &str, text: &str, expected: &str) -> Result<(), IoError> {
    let first = text.lines().next().unwrap_or("");
    match first.strip_prefix("# schema: ") {
        Some(found) if found.trim() == expected => Ok(()),
        Some(found) => Err(IoError::Schema { context: context.into(), expected: expected.into(), found: found.trim().into() }),
        None => Err(IoError::Schema { context: context.into(), expected: expected.into(), found: first.into() }),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String, IoError> {
    read_bytes(path).map(|b| sha256_hex(&b))
}

/// Writes `provenance.txt`: schema version, then the given entries in order.
pub fn write_provenance(dir: &Path, entries: &[(String, String)]) -> Result<(), IoError> {
    let mut s = format!("schema_version = {SCHEMA_VERSION}\n");
    for (k, v) in entries {
        s.push_str(&format!("{k} = {v}\n"));
    }
    write_bytes(&dir.join("provenance.txt"), s.as_bytes())
}
