//! Snapshot repository.
//!
//! Each snapshot is a directory holding verbatim copies of the committed
//! segment files, tombstone sidecars and commit point, plus `manifest.json`
//! with per-file SHA-256 checksums. `index.json` lists the live snapshots and
//! is replaced atomically.

use std::fs;
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::Timestamp;
use crate::engine::error::{EngineError, Result};
use crate::engine::segment::write_atomic;

const INDEX_FILE: &str = "index.json";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub id: String,
    pub created_at: Timestamp,
    pub docs: usize,
    pub files: Vec<FileEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewritten_from: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct RepoIndex {
    next: u64,
    snapshots: Vec<SnapshotMeta>,
}

#[derive(Debug)]
pub struct SnapshotRepo {
    dir: PathBuf,
    lock: Mutex<()>,
}

impl SnapshotRepo {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let repo = SnapshotRepo {
            dir: dir.to_path_buf(),
            lock: Mutex::new(()),
        };
        // Staging and scratch leftovers from an interrupted rewrite are never live.
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name.starts_with(".tmp-") || name.starts_with(".scratch-") {
                fs::remove_dir_all(entry.path())?;
            }
        }
        Ok(repo)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshot_dir(&self, id: &str) -> PathBuf {
        self.dir.join(id)
    }

    fn load(&self) -> Result<RepoIndex> {
        match fs::read(self.dir.join(INDEX_FILE)) {
            Ok(b) => serde_json::from_slice(&b).map_err(|e| EngineError::Corrupt {
                what: INDEX_FILE.into(),
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(RepoIndex {
                next: 1,
                ..Default::default()
            }),
            Err(e) => Err(e.into()),
        }
    }

    fn save(&self, idx: &RepoIndex) -> Result<()> {
        write_atomic(&self.dir.join(INDEX_FILE), &serde_json::to_vec_pretty(idx)?)
    }

    pub fn next_id(&self) -> String {
        let _g = self.lock.lock();
        let next = self.load().map(|i| i.next.max(1)).unwrap_or(1);
        format!("snap-{next:06}")
    }

    pub fn list(&self) -> Result<Vec<SnapshotMeta>> {
        let _g = self.lock.lock();
        Ok(self.load()?.snapshots)
    }

    pub fn get(&self, id: &str) -> Result<SnapshotMeta> {
        self.list()?
            .into_iter()
            .find(|s| s.id == id)
            .ok_or_else(|| EngineError::SnapshotNotFound(id.to_string()))
    }

    fn bump(idx: &mut RepoIndex, id: &str) {
        if let Some(n) = id.strip_prefix("snap-").and_then(|n| n.parse::<u64>().ok()) {
            idx.next = idx.next.max(n + 1);
        }
    }

    /// Copies every file of `source` into a staging directory. The result is
    /// not listed until [`SnapshotRepo::publish`] or [`SnapshotRepo::swap`].
    pub fn stage(
        &self,
        id: &str,
        source: &Path,
        created_at: Timestamp,
        docs: usize,
    ) -> Result<SnapshotMeta> {
        let staging = self.dir.join(format!(".tmp-{id}"));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        let mut names: Vec<String> = fs::read_dir(source)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| !n.ends_with(".tmp"))
            .collect();
        names.sort();
        let mut files = Vec::new();
        for name in names {
            let bytes = fs::read(source.join(&name))?;
            fs::write(staging.join(&name), &bytes)?;
            files.push(FileEntry {
                sha256: sha256_hex(&bytes),
                bytes: bytes.len() as u64,
                name,
            });
        }
        let meta = SnapshotMeta {
            id: id.to_string(),
            created_at,
            docs,
            files,
            rewritten_from: None,
        };
        write_atomic(
            &staging.join(MANIFEST_FILE),
            &serde_json::to_vec_pretty(&meta)?,
        )?;
        Ok(meta)
    }

    pub fn discard_staged(&self, id: &str) -> Result<()> {
        let staging = self.dir.join(format!(".tmp-{id}"));
        if staging.exists() {
            fs::remove_dir_all(staging)?;
        }
        Ok(())
    }

    fn promote(&self, meta: &SnapshotMeta) -> Result<()> {
        let target = self.snapshot_dir(&meta.id);
        if target.exists() {
            fs::remove_dir_all(&target)?;
        }
        fs::rename(self.dir.join(format!(".tmp-{}", meta.id)), target)?;
        Ok(())
    }

    pub fn create(
        &self,
        id: &str,
        source: &Path,
        created_at: Timestamp,
        docs: usize,
    ) -> Result<SnapshotMeta> {
        let meta = self.stage(id, source, created_at, docs)?;
        self.publish(meta)
    }

    pub fn publish(&self, meta: SnapshotMeta) -> Result<SnapshotMeta> {
        let _g = self.lock.lock();
        self.promote(&meta)?;
        let mut idx = self.load()?;
        Self::bump(&mut idx, &meta.id);
        idx.snapshots.retain(|s| s.id != meta.id);
        idx.snapshots.push(meta.clone());
        self.save(&idx)?;
        Ok(meta)
    }

    /// Publishes a staged replacement for `old_id` and then removes the old
    /// snapshot. The index is switched in a single atomic write, so readers
    /// see either the old or the new snapshot, never neither.
    pub fn swap(
        &self,
        old_id: &str,
        mut staged: SnapshotMeta,
        keep_old_files: bool,
    ) -> Result<SnapshotMeta> {
        let _g = self.lock.lock();
        staged.rewritten_from = Some(old_id.to_string());
        write_atomic(
            &self
                .dir
                .join(format!(".tmp-{}", staged.id))
                .join(MANIFEST_FILE),
            &serde_json::to_vec_pretty(&staged)?,
        )?;
        self.promote(&staged)?;
        let mut idx = self.load()?;
        Self::bump(&mut idx, &staged.id);
        let pos = idx
            .snapshots
            .iter()
            .position(|s| s.id == old_id)
            .unwrap_or(idx.snapshots.len());
        idx.snapshots
            .retain(|s| s.id != old_id && s.id != staged.id);
        idx.snapshots
            .insert(pos.min(idx.snapshots.len()), staged.clone());
        self.save(&idx)?;
        if !keep_old_files && old_id != staged.id {
            let old = self.snapshot_dir(old_id);
            if old.exists() {
                fs::remove_dir_all(old)?;
            }
        }
        Ok(staged)
    }

    /// Removes snapshot directories the index does not list. Staging and
    /// scratch directories are left to their owners.
    pub fn remove_orphans(&self) -> Result<Vec<String>> {
        let _g = self.lock.lock();
        let idx = self.load()?;
        let mut removed = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !entry.file_type()?.is_dir() || name.starts_with('.') {
                continue;
            }
            if !idx.snapshots.iter().any(|s| s.id == name) {
                fs::remove_dir_all(entry.path())?;
                removed.push(name);
            }
        }
        removed.sort();
        Ok(removed)
    }

    /// Checks every listed file against its recorded checksum.
    pub fn verify(&self, id: &str) -> Result<SnapshotMeta> {
        let meta = self.get(id)?;
        let dir = self.snapshot_dir(id);
        for f in &meta.files {
            let bytes = fs::read(dir.join(&f.name)).map_err(|e| EngineError::Corrupt {
                what: format!("{id}/{}", f.name),
                reason: e.to_string(),
            })?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(EngineError::Corrupt {
                    what: format!("{id}/{}", f.name),
                    reason: "checksum mismatch".into(),
                });
            }
        }
        Ok(meta)
    }

    /// Copies the snapshot's data files (not the manifest) into `dest`.
    pub fn copy_out(&self, id: &str, dest: &Path) -> Result<()> {
        let meta = self.get(id)?;
        let dir = self.snapshot_dir(id);
        fs::create_dir_all(dest)?;
        for f in &meta.files {
            fs::copy(dir.join(&f.name), dest.join(&f.name))?;
        }
        Ok(())
    }

    pub fn delete(&self, id: &str) -> Result<()> {
        let _g = self.lock.lock();
        let mut idx = self.load()?;
        let before = idx.snapshots.len();
        idx.snapshots.retain(|s| s.id != id);
        if before == idx.snapshots.len() {
            return Err(EngineError::SnapshotNotFound(id.to_string()));
        }
        self.save(&idx)?;
        let d = self.snapshot_dir(id);
        if d.exists() {
            fs::remove_dir_all(d)?;
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
