//! Verification register.
//!
//! Records, per indexed document, the marker strings the residue scanner
//! must look for: sentinel tokens and personal field values. The file lives
//! outside every scanned surface and each record is obfuscated with a
//! SHA-256 counter-mode keystream under a per-store key, so the register
//! does not itself leak the values in plain bytes. Entries are purged once
//! their erasure has been verified.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::document::{DocId, Document, SubjectId};
use crate::engine::error::{EngineError, Result};
use crate::engine::segment::write_atomic;
use crate::engine::text::tokenize;

pub const MIN_VALUE_MARKER_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterEntry {
    pub doc_id: DocId,
    pub subjects: Vec<SubjectId>,
    #[serde(default)]
    pub purposes: Vec<String>,
    pub markers: Vec<String>,
}

impl RegisterEntry {
    pub fn of(doc: &Document) -> Self {
        RegisterEntry {
            doc_id: doc.doc_id.clone(),
            subjects: doc.subjects().into_iter().collect(),
            purposes: doc.purposes().into_iter().collect(),
            markers: markers_of(doc),
        }
    }
}

pub fn is_sentinel(token: &str) -> bool {
    token.len() == 16 && token.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Sentinel tokens in any field plus tagged personal values long enough to be distinctive.
pub fn markers_of(doc: &Document) -> Vec<String> {
    let mut out = BTreeSet::new();
    for (field, value) in &doc.fields {
        for t in tokenize(value) {
            if is_sentinel(&t) {
                out.insert(t);
            }
        }
        if doc.pii_tags.contains_key(field) && value.chars().count() >= MIN_VALUE_MARKER_LEN {
            out.insert(value.clone());
        }
    }
    out.into_iter().collect()
}

struct Inner {
    entries: BTreeMap<DocId, RegisterEntry>,
    next_nonce: u64,
}

pub struct VerificationRegister {
    dir: PathBuf,
    key: [u8; 32],
    inner: Mutex<Inner>,
}

impl std::fmt::Debug for VerificationRegister {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VerificationRegister")
            .field("dir", &self.dir)
            .finish_non_exhaustive()
    }
}

const KEY_FILE: &str = "register.key";
const DATA_FILE: &str = "register.dat";

impl VerificationRegister {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let key_path = dir.join(KEY_FILE);
        let key: [u8; 32] = match fs::read(&key_path) {
            Ok(b) if b.len() == 32 => b.try_into().unwrap(),
            _ => {
                let mut k = [0u8; 32];
                rand::thread_rng().fill_bytes(&mut k);
                write_atomic(&key_path, &k)?;
                k
            }
        };
        let reg = VerificationRegister {
            dir: dir.to_path_buf(),
            key,
            inner: Mutex::new(Inner {
                entries: BTreeMap::new(),
                next_nonce: 0,
            }),
        };
        let text = fs::read_to_string(reg.data_path()).unwrap_or_default();
        let mut inner = reg.inner.lock();
        for line in text.lines() {
            let (nonce, entry) = reg.decode_line(line)?;
            inner.next_nonce = inner.next_nonce.max(nonce + 1);
            let Record::Put(e) = entry;
            inner.entries.insert(e.doc_id.clone(), e);
        }
        drop(inner);
        Ok(reg)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn data_path(&self) -> PathBuf {
        self.dir.join(DATA_FILE)
    }

    fn keystream_xor(&self, nonce: u64, data: &mut [u8]) {
        for (i, chunk) in data.chunks_mut(32).enumerate() {
            let mut h = Sha256::new();
            h.update(self.key);
            h.update(nonce.to_le_bytes());
            h.update((i as u64).to_le_bytes());
            let block = h.finalize();
            for (b, k) in chunk.iter_mut().zip(block.iter()) {
                *b ^= k;
            }
        }
    }

    fn encode_line(&self, nonce: u64, rec: &Record) -> Result<String> {
        let mut bytes = serde_json::to_vec(rec)?;
        self.keystream_xor(nonce, &mut bytes);
        Ok(format!("{nonce:016x}:{}\n", hex::encode(bytes)))
    }

    fn decode_line(&self, line: &str) -> Result<(u64, Record)> {
        let corrupt = |r: &str| EngineError::Corrupt {
            what: DATA_FILE.into(),
            reason: r.to_string(),
        };
        let (n, body) = line
            .split_once(':')
            .ok_or_else(|| corrupt("missing separator"))?;
        let nonce = u64::from_str_radix(n, 16).map_err(|e| corrupt(&e.to_string()))?;
        let mut bytes = hex::decode(body).map_err(|e| corrupt(&e.to_string()))?;
        self.keystream_xor(nonce, &mut bytes);
        let rec = serde_json::from_slice(&bytes).map_err(|e| corrupt(&e.to_string()))?;
        Ok((nonce, rec))
    }

    fn append(&self, inner: &mut Inner, recs: &[Record]) -> Result<()> {
        let mut buf = String::new();
        for r in recs {
            buf.push_str(&self.encode_line(inner.next_nonce, r)?);
            inner.next_nonce += 1;
        }
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.data_path())?;
        f.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn record(&self, entries: Vec<RegisterEntry>) -> Result<()> {
        if entries.is_empty() {
            return Ok(());
        }
        let mut inner = self.inner.lock();
        let recs: Vec<Record> = entries.iter().cloned().map(Record::Put).collect();
        self.append(&mut inner, &recs)?;
        for e in entries {
            inner.entries.insert(e.doc_id.clone(), e);
        }
        Ok(())
    }

    pub fn get(&self, id: &DocId) -> Option<RegisterEntry> {
        self.inner.lock().entries.get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn docs_of_subject(&self, s: &SubjectId) -> Vec<DocId> {
        self.inner
            .lock()
            .entries
            .values()
            .filter(|e| e.subjects.contains(s))
            .map(|e| e.doc_id.clone())
            .collect()
    }

    /// Markers of the target documents, minus values that also belong to
    /// registered documents outside the target set.
    pub fn markers_for(&self, targets: &BTreeSet<DocId>) -> Vec<String> {
        let inner = self.inner.lock();
        let mut want: BTreeSet<String> = BTreeSet::new();
        for id in targets {
            if let Some(e) = inner.entries.get(id) {
                want.extend(e.markers.iter().cloned());
            }
        }
        for (id, e) in &inner.entries {
            if !targets.contains(id) {
                for m in &e.markers {
                    want.remove(m);
                }
            }
        }
        want.into_iter().collect()
    }

    /// Removes entries and compacts the file so no obfuscated copy remains.
    pub fn purge(&self, ids: &[DocId]) -> Result<usize> {
        let mut inner = self.inner.lock();
        let mut n = 0;
        for id in ids {
            n += usize::from(inner.entries.remove(id).is_some());
        }
        if n > 0 {
            let mut buf = String::new();
            let entries: Vec<RegisterEntry> = inner.entries.values().cloned().collect();
            for e in entries {
                buf.push_str(&self.encode_line(inner.next_nonce, &Record::Put(e))?);
                inner.next_nonce += 1;
            }
            write_atomic(&self.data_path(), buf.as_bytes())?;
        }
        Ok(n)
    }
}

#[derive(Debug, Serialize, Deserialize)]
enum Record {
    Put(RegisterEntry),
}
