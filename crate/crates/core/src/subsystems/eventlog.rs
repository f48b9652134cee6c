//! Engine event log.
//!
//! One line per event: `LEVEL ts=<ms> exp=<ms|never> code=<code> <payload>`.
//! At the default level only identifiers and field names are written; the
//! trace level also writes source values. Lines can be culled (markers
//! replaced by a redaction token) or expired by retention.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::engine::error::Result;
use crate::engine::segment::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogLevel {
    #[default]
    Info,
    Trace,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogStats {
    pub lines_redacted: usize,
    pub lines_removed: usize,
}

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    level: LogLevel,
    retention: Option<Duration>,
}

impl EventLog {
    pub fn open(path: &Path, level: LogLevel, retention: Option<Duration>) -> Result<Self> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EventLog {
            path: path.to_path_buf(),
            level,
            retention,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn level(&self) -> LogLevel {
        self.level
    }

    pub fn retention(&self) -> Option<Duration> {
        self.retention
    }

    /// Writes an event. `detail` is included only at trace level.
    pub fn event(
        &self,
        ts: Timestamp,
        code: &str,
        summary: &str,
        detail: Option<&str>,
    ) -> Result<()> {
        let exp = match self.retention {
            Some(r) => ts.plus(r).millis().to_string(),
            None => "never".to_string(),
        };
        let level = match self.level {
            LogLevel::Info => "INFO",
            LogLevel::Trace => "TRACE",
        };
        let mut line = format!("{level} ts={} exp={exp} code={code} {summary}", ts.millis());
        if let (LogLevel::Trace, Some(d)) = (self.level, detail) {
            line.push_str(" source=");
            line.push_str(d);
        }
        line.push('\n');
        let mut f = OpenOptions::new().append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        Ok(())
    }

    pub fn read(&self) -> Result<String> {
        Ok(fs::read_to_string(&self.path).unwrap_or_default())
    }

    /// Replaces every marker occurrence (raw or JSON-escaped) with a redaction
    /// token, and the whole source payload of lines about any of `doc_ids`.
    pub fn cull(
        &self,
        markers: &[String],
        doc_ids: &[String],
        request_id: &str,
    ) -> Result<LogStats> {
        let text = self.read()?;
        let token = format!("[REDACTED:{request_id}]");
        let mut needles: Vec<String> = Vec::new();
        for m in markers.iter().filter(|m| !m.is_empty()) {
            needles.push(m.clone());
            let escaped = serde_json::to_string(m).unwrap_or_default();
            let escaped = escaped.trim_matches('"').to_string();
            if escaped != *m {
                needles.push(escaped);
            }
        }
        let mut stats = LogStats::default();
        let mut out = String::with_capacity(text.len());
        for line in text.lines() {
            let mut l = line.to_string();
            if let Some(at) = l.find(" source=") {
                let about = l[..at].split(' ').any(|t| {
                    t.strip_prefix("doc=")
                        .is_some_and(|d| doc_ids.iter().any(|x| x == d))
                });
                if about {
                    l.truncate(at + " source=".len());
                    l.push_str(&token);
                }
            }
            for n in &needles {
                if l.contains(n.as_str()) {
                    l = l.replace(n.as_str(), &token);
                }
            }
            if l != line {
                stats.lines_redacted += 1;
            }
            out.push_str(&l);
            out.push('\n');
        }
        if stats.lines_redacted > 0 {
            write_atomic(&self.path, out.as_bytes())?;
        }
        Ok(stats)
    }

    /// Drops lines whose expiry has passed.
    pub fn expire(&self, now: Timestamp) -> Result<LogStats> {
        let text = self.read()?;
        let mut stats = LogStats::default();
        let mut out = String::with_capacity(text.len());
        for line in text.lines() {
            if line_expiry(line).is_some_and(|e| e < now) {
                stats.lines_removed += 1;
                continue;
            }
            out.push_str(line);
            out.push('\n');
        }
        if stats.lines_removed > 0 {
            write_atomic(&self.path, out.as_bytes())?;
        }
        Ok(stats)
    }
}

fn line_expiry(line: &str) -> Option<Timestamp> {
    line.split_whitespace()
        .find_map(|t| t.strip_prefix("exp="))
        .and_then(|v| v.parse().ok())
        .map(Timestamp)
}
