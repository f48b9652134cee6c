use std::io;

use thiserror::Error;

use super::document::DocId;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("field `{0}` is declared personal but carries no PII tag")]
    UntaggedPersonalData(String),
    #[error("invalid PII tag on `{field}`: {reason}")]
    InvalidTag { field: String, reason: String },
    #[error("document id {0} already exists")]
    DuplicateId(DocId),
    #[error("malformed query: {0}")]
    MalformedQuery(String),
    #[error("malformed document on line {line}: {reason}")]
    MalformedDocument { line: usize, reason: String },
    #[error("a merge is already in progress")]
    MergeInProgress,
    #[error("snapshot {0} not found")]
    SnapshotNotFound(String),
    #[error("snapshot rewrite of {id} did not complete: {reason}")]
    RewriteIncomplete { id: String, reason: String },
    #[error("corrupt {what}: {reason}")]
    Corrupt { what: String, reason: String },
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EngineError>;
