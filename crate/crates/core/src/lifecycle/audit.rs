//! Append-only audit trail of request transitions. Records carry only
//! identifiers, state names and counts, never document content.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::engine::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub ts: Timestamp,
    pub request_id: String,
    pub event: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<(String, String)>,
    pub expiry_at: Timestamp,
}

#[derive(Debug)]
pub struct AuditLog {
    path: PathBuf,
    retention: Duration,
    file: Mutex<File>,
}

impl AuditLog {
    pub fn open(dir: &Path, retention: Duration) -> Result<AuditLog> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("audit.jsonl");
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(AuditLog {
            path,
            retention,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(
        &self,
        ts: Timestamp,
        request_id: &str,
        event: &str,
        details: Vec<(String, String)>,
    ) -> Result<()> {
        let rec = AuditRecord {
            ts,
            request_id: request_id.to_string(),
            event: event.to_string(),
            details,
            expiry_at: ts.plus(self.retention),
        };
        let mut line = serde_json::to_vec(&rec).expect("audit records serialize");
        line.push(b'\n');
        let mut f = self.file.lock();
        f.write_all(&line)?;
        f.sync_data()?;
        Ok(())
    }

    pub fn records(&self) -> Result<Vec<AuditRecord>> {
        let _g = self.file.lock();
        let f = File::open(&self.path)?;
        let mut out = Vec::new();
        for line in BufReader::new(f).lines() {
            let line = line?;
            if let Ok(r) = serde_json::from_str(&line) {
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Drops records past their expiry. Returns how many were removed.
    pub fn expire(&self, now: Timestamp) -> Result<usize> {
        let mut f = self.file.lock();
        let text = std::fs::read_to_string(&self.path)?;
        let mut kept = String::new();
        let mut removed = 0;
        for line in text.lines() {
            match serde_json::from_str::<AuditRecord>(line) {
                Ok(r) if r.expiry_at < now => removed += 1,
                _ => {
                    kept.push_str(line);
                    kept.push('\n');
                }
            }
        }
        if removed > 0 {
            crate::engine::segment::write_atomic(&self.path, kept.as_bytes())?;
            *f = OpenOptions::new().append(true).open(&self.path)?;
        }
        Ok(removed)
    }

    pub fn for_request(&self, request_id: &str) -> Result<Vec<AuditRecord>> {
        Ok(self
            .records()?
            .into_iter()
            .filter(|r| r.request_id == request_id)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::days;

    #[test]
    fn records_carry_expiry_and_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let log = AuditLog::open(dir.path(), days(10)).unwrap();
        log.append(
            Timestamp(5),
            "req-1",
            "submitted",
            vec![("state".into(), "verified".into())],
        )
        .unwrap();
        drop(log);
        let log = AuditLog::open(dir.path(), days(10)).unwrap();
        log.append(Timestamp(6), "req-2", "submitted", vec![])
            .unwrap();
        let recs = log.records().unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].expiry_at, Timestamp(5).plus(days(10)));
        assert_eq!(log.for_request("req-2").unwrap().len(), 1);
        assert_eq!(log.expire(Timestamp(5).plus(days(10))).unwrap(), 0);
        assert_eq!(log.expire(Timestamp(6).plus(days(10))).unwrap(), 1);
        log.append(Timestamp(7), "req-3", "submitted", vec![])
            .unwrap();
        assert_eq!(log.records().unwrap().len(), 2);
    }
}
