//! Documents, PII tags and the JSON-lines ingest format.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::error::EngineError;
use crate::clock::{duration_ms, Timestamp};

/// System-generated document identifier. Never derived from document content.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(String);

impl DocId {
    pub fn new(id: impl Into<String>) -> Self {
        DocId(id.into())
    }

    pub fn from_seq(seq: u64) -> Self {
        DocId(format!("doc-{seq}"))
    }

    /// Sequence number for ids produced by [`DocId::from_seq`].
    pub fn seq(&self) -> Option<u64> {
        self.0.strip_prefix("doc-").and_then(|s| s.parse().ok())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Opaque identifier of a data subject.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SubjectId(String);

impl SubjectId {
    pub fn new(id: impl Into<String>) -> Self {
        SubjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Attributes attached to every personal-data field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiiTag {
    pub subject_id: SubjectId,
    pub purpose: String,
    #[serde(
        rename = "ttl_ms",
        default,
        with = "duration_ms::option",
        skip_serializing_if = "Option::is_none"
    )]
    pub ttl: Option<Duration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consent_ref: Option<String>,
}

impl PiiTag {
    pub fn new(subject: impl Into<String>, purpose: impl Into<String>) -> Self {
        PiiTag {
            subject_id: SubjectId::new(subject),
            purpose: purpose.into(),
            ttl: None,
            consent_ref: None,
        }
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = Some(ttl);
        self
    }
}

/// A document as submitted for ingestion; the engine assigns the id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentDraft {
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub pii_tags: BTreeMap<String, PiiTag>,
}

impl DocumentDraft {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.fields.insert(name.into(), value.into());
        self
    }

    pub fn personal(
        mut self,
        name: impl Into<String>,
        value: impl Into<String>,
        tag: PiiTag,
    ) -> Self {
        let name = name.into();
        self.fields.insert(name.clone(), value.into());
        self.pii_tags.insert(name, tag);
        self
    }

    /// Checks tag invariants and the personal-field denylist.
    pub fn validate(&self, denylist: &[String]) -> Result<(), EngineError> {
        for (field, tag) in &self.pii_tags {
            if !self.fields.contains_key(field) {
                return Err(EngineError::InvalidTag {
                    field: field.clone(),
                    reason: "tag refers to a field that is not present".into(),
                });
            }
            if tag.subject_id.as_str().trim().is_empty() {
                return Err(EngineError::InvalidTag {
                    field: field.clone(),
                    reason: "subject_id is empty".into(),
                });
            }
            if tag.ttl == Some(Duration::ZERO) {
                return Err(EngineError::InvalidTag {
                    field: field.clone(),
                    reason: "ttl must be strictly positive".into(),
                });
            }
        }
        for field in self.fields.keys() {
            let personal = denylist.iter().any(|d| d.eq_ignore_ascii_case(field));
            if personal && !self.pii_tags.contains_key(field) {
                return Err(EngineError::UntaggedPersonalData(field.clone()));
            }
        }
        Ok(())
    }

    pub fn into_document(self, doc_id: DocId) -> Document {
        Document {
            doc_id,
            fields: self.fields,
            pii_tags: self.pii_tags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: DocId,
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub pii_tags: BTreeMap<String, PiiTag>,
}

impl Document {
    pub fn subjects(&self) -> BTreeSet<SubjectId> {
        self.pii_tags
            .values()
            .map(|t| t.subject_id.clone())
            .collect()
    }

    pub fn purposes(&self) -> BTreeSet<String> {
        self.pii_tags.values().map(|t| t.purpose.clone()).collect()
    }

    /// Shortest TTL among the tags; the whole document expires with it.
    pub fn min_ttl(&self) -> Option<Duration> {
        self.pii_tags.values().filter_map(|t| t.ttl).min()
    }
}

/// A document together with the engine metadata kept in segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredDocument {
    #[serde(flatten)]
    pub doc: Document,
    pub indexed_at: Timestamp,
}

impl StoredDocument {
    pub fn expires_at(&self) -> Option<Timestamp> {
        self.doc.min_ttl().map(|ttl| self.indexed_at.plus(ttl))
    }

    pub fn is_expired(&self, now: Timestamp) -> bool {
        self.expires_at().is_some_and(|e| e <= now)
    }
}

/// Reads the JSON-lines ingest format: one `{"fields":..,"pii_tags":..}` per line.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<DocumentDraft>, EngineError> {
    let mut drafts = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let draft: DocumentDraft =
            serde_json::from_str(&line).map_err(|e| EngineError::MalformedDocument {
                line: n + 1,
                reason: e.to_string(),
            })?;
        drafts.push(draft);
    }
    Ok(drafts)
}
