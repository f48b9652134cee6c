//! Write-ahead transaction log.
//!
//! Every record is `[len: u32 LE][crc32: u32 LE][json payload]`. Replay stops
//! at the first torn or corrupt record and the file is cut back to the last
//! good offset.

use std::fs::{self, File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::engine::document::{DocId, Document};
use crate::engine::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TranslogOp {
    Index { doc: Document },
    MarkDelete { doc_ids: Vec<DocId> },
    Update { doc: Document },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslogEntry {
    pub seq_no: u64,
    pub timestamp: Timestamp,
    pub op: TranslogOp,
}

const HEADER: usize = 8;

#[derive(Debug)]
pub struct Translog {
    path: PathBuf,
    file: File,
    size: u64,
}

impl Translog {
    /// Opens (or creates) the log and returns the entries that survived.
    pub fn open(path: &Path) -> Result<(Translog, Vec<TranslogEntry>)> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut bytes = Vec::new();
        if path.exists() {
            File::open(path)?.read_to_end(&mut bytes)?;
        }
        let (entries, good) = decode(&bytes);
        let file = OpenOptions::new()
            .create(true)
            .read(true)
            .write(true)
            .open(path)?;
        if (good as u64) < bytes.len() as u64 {
            file.set_len(good as u64)?;
        }
        let mut log = Translog {
            path: path.to_path_buf(),
            file,
            size: good as u64,
        };
        log.seek_end()?;
        Ok((log, entries))
    }

    fn seek_end(&mut self) -> Result<()> {
        use std::io::{Seek, SeekFrom};
        self.file.seek(SeekFrom::Start(self.size))?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn size_bytes(&self) -> u64 {
        self.size
    }

    pub fn append(&mut self, entry: &TranslogEntry) -> Result<()> {
        self.append_batch(std::slice::from_ref(entry))
    }

    /// Appends several records with a single write.
    pub fn append_batch(&mut self, entries: &[TranslogEntry]) -> Result<()> {
        let mut buf = Vec::new();
        for e in entries {
            encode(e, &mut buf)?;
        }
        self.file.write_all(&buf)?;
        self.size += buf.len() as u64;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<()> {
        self.file.sync_data()?;
        Ok(())
    }

    /// Drops every record; called once their effects are durable in segments.
    pub fn truncate(&mut self) -> Result<()> {
        self.file.set_len(0)?;
        self.file.sync_all()?;
        self.size = 0;
        self.seek_end()
    }
}

pub fn encode(entry: &TranslogEntry, out: &mut Vec<u8>) -> Result<()> {
    let payload = serde_json::to_vec(entry)?;
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(())
}

/// Decodes records until the first invalid one. Returns them plus the
/// byte offset just past the last valid record.
pub fn decode(bytes: &[u8]) -> (Vec<TranslogEntry>, usize) {
    let mut entries = Vec::new();
    let mut pos = 0;
    while bytes.len() - pos >= HEADER {
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap());
        let start = pos + HEADER;
        let Some(end) = start.checked_add(len).filter(|&e| e <= bytes.len()) else {
            break;
        };
        let payload = &bytes[start..end];
        if crc32fast::hash(payload) != crc {
            break;
        }
        match serde_json::from_slice(payload) {
            Ok(e) => entries.push(e),
            Err(_) => break,
        }
        pos = end;
    }
    (entries, pos)
}
