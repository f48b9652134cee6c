//! Primary/replica pair.
//!
//! The replica is a second engine in its own directory. Every mutation is
//! prepared on the primary (which assigns sequence numbers and ids) and the
//! same entry is applied to both copies before the call returns. In strict
//! mode an unreachable replica fails the mutation before the primary is
//! touched; in queued mode the operation is queued and replayed on resync.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{SharedClock, Timestamp};
use crate::engine::document::{DocId, DocumentDraft};
use crate::engine::error::EngineError;
use crate::engine::query::SearchRequest;
use crate::engine::{
    ClearReport, Engine, EngineConfig, FlushReport, MergeReport, Mutation, SearchResponse, Selector,
};
use crate::subsystems::eventlog::LogStats;
use crate::subsystems::snapshot::SnapshotMeta;
use crate::subsystems::translog::{TranslogEntry, TranslogOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReplicationMode {
    #[default]
    Strict,
    Queued,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("replica unreachable")]
    ReplicaUnreachable,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

pub type StoreResult<T> = std::result::Result<T, StoreError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Primary,
    Replica,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Primary, Role::Replica];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Primary => "primary",
            Role::Replica => "replica",
        }
    }
}

/// A replicated operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Operation {
    Write {
        entry: TranslogEntry,
    },
    Flush,
    Merge {
        expunge: bool,
    },
    ClearCaches,
    CullLogs {
        markers: Vec<String>,
        #[serde(default)]
        doc_ids: Vec<String>,
        request_id: String,
    },
    ExpireLogs {
        now: Timestamp,
    },
    SnapshotCreate {
        id: String,
    },
    SnapshotRestore {
        id: String,
    },
    SnapshotRewrite {
        id: String,
        selector: Selector,
        new_id: String,
    },
}

pub struct Store {
    root: PathBuf,
    primary: Engine,
    replica: Engine,
    mode: ReplicationMode,
    reachable: AtomicBool,
    pending: Mutex<VecDeque<Operation>>,
    write: Mutex<()>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("root", &self.root)
            .field("mode", &self.mode)
            .finish_non_exhaustive()
    }
}

impl Store {
    pub fn open(
        root: impl AsRef<Path>,
        config: EngineConfig,
        mode: ReplicationMode,
        clock: SharedClock,
    ) -> StoreResult<Store> {
        let root = root.as_ref().to_path_buf();
        let primary = Engine::open(root.join("primary"), config.clone(), clock.clone())?;
        let replica = Engine::open(root.join("replica"), config, clock)?;
        Ok(Store {
            root,
            primary,
            replica,
            mode,
            reachable: AtomicBool::new(true),
            pending: Mutex::new(VecDeque::new()),
            write: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn primary(&self) -> &Engine {
        &self.primary
    }

    pub fn replica(&self) -> &Engine {
        &self.replica
    }

    pub fn engine(&self, copy: Role) -> &Engine {
        match copy {
            Role::Primary => &self.primary,
            Role::Replica => &self.replica,
        }
    }

    pub fn mode(&self) -> ReplicationMode {
        self.mode
    }

    pub fn set_replica_reachable(&self, up: bool) {
        self.reachable.store(up, Ordering::Release);
    }

    pub fn replica_reachable(&self) -> bool {
        self.reachable.load(Ordering::Acquire)
    }

    /// The replica, if it can be reached right now.
    pub fn replica_checked(&self) -> StoreResult<&Engine> {
        if self.replica_reachable() {
            Ok(&self.replica)
        } else {
            Err(StoreError::ReplicaUnreachable)
        }
    }

    pub fn pending(&self) -> Vec<Operation> {
        self.pending.lock().iter().cloned().collect()
    }

    fn guard_strict(&self) -> StoreResult<()> {
        if self.mode == ReplicationMode::Strict && !self.replica_reachable() {
            return Err(StoreError::ReplicaUnreachable);
        }
        Ok(())
    }

    fn run(engine: &Engine, op: &Operation) -> Result<(), EngineError> {
        match op {
            Operation::Write { entry } => engine.apply(entry),
            Operation::Flush => engine.flush().map(|_| ()),
            Operation::Merge { expunge } => engine.merge(*expunge).map(|_| ()),
            Operation::ClearCaches => {
                engine.clear_caches();
                Ok(())
            }
            Operation::CullLogs {
                markers,
                doc_ids,
                request_id,
            } => engine.cull_logs(markers, doc_ids, request_id).map(|_| ()),
            Operation::ExpireLogs { now } => engine.expire_logs(*now).map(|_| ()),
            Operation::SnapshotCreate { id } => {
                engine.snapshot_create(Some(id.clone())).map(|_| ())
            }
            Operation::SnapshotRestore { id } => engine.snapshot_restore(id),
            Operation::SnapshotRewrite {
                id,
                selector,
                new_id,
            } => engine
                .snapshot_rewrite(id, selector, Some(new_id.clone()))
                .map(|_| ()),
        }
    }

    /// Pushes an operation already applied on the primary to the replica.
    fn push(&self, op: Operation) -> StoreResult<()> {
        if !self.replica_reachable() {
            return match self.mode {
                ReplicationMode::Strict => Err(StoreError::ReplicaUnreachable),
                ReplicationMode::Queued => {
                    self.pending.lock().push_back(op);
                    Ok(())
                }
            };
        }
        self.drain_pending()?;
        Self::run(&self.replica, &op)?;
        Ok(())
    }

    fn drain_pending(&self) -> StoreResult<usize> {
        let mut q = self.pending.lock();
        let mut n = 0;
        while let Some(op) = q.front() {
            Self::run(&self.replica, op)?;
            q.pop_front();
            n += 1;
        }
        Ok(n)
    }

    /// Replays queued operations once the replica is reachable again.
    pub fn resync(&self) -> StoreResult<usize> {
        let _w = self.write.lock();
        if !self.replica_reachable() {
            return Err(StoreError::ReplicaUnreachable);
        }
        self.drain_pending()
    }

    fn write_entry(&self, m: Mutation) -> StoreResult<Option<TranslogEntry>> {
        let _w = self.write.lock();
        self.guard_strict()?;
        let Some(entry) = self.primary.prepare(m)? else {
            return Ok(None);
        };
        self.primary.apply(&entry)?;
        self.push(Operation::Write {
            entry: entry.clone(),
        })?;
        Ok(Some(entry))
    }

    pub fn index(&self, draft: DocumentDraft) -> StoreResult<DocId> {
        match self.write_entry(Mutation::Index(draft))? {
            Some(TranslogEntry {
                op: TranslogOp::Index { doc },
                ..
            }) => Ok(doc.doc_id),
            _ => unreachable!("index yields an index entry"),
        }
    }

    pub fn update(&self, id: DocId, draft: DocumentDraft) -> StoreResult<()> {
        self.write_entry(Mutation::Update(id, draft)).map(|_| ())
    }

    pub fn mark_delete(&self, sel: &Selector) -> StoreResult<Vec<DocId>> {
        Ok(match self.write_entry(Mutation::Delete(sel.clone()))? {
            Some(TranslogEntry {
                op: TranslogOp::MarkDelete { doc_ids },
                ..
            }) => doc_ids,
            _ => Vec::new(),
        })
    }

    pub fn ttl_sweep(&self, now: Timestamp) -> StoreResult<Vec<DocId>> {
        let ids = self.primary.expired_at(now);
        if ids.is_empty() {
            return Ok(ids);
        }
        self.mark_delete(&Selector::DocIds { doc_ids: ids })
    }

    fn both<T>(
        &self,
        op: Operation,
        f: impl FnOnce(&Engine) -> Result<T, EngineError>,
    ) -> StoreResult<T> {
        let _w = self.write.lock();
        self.guard_strict()?;
        let out = f(&self.primary)?;
        self.push(op)?;
        Ok(out)
    }

    pub fn flush(&self) -> StoreResult<FlushReport> {
        self.both(Operation::Flush, |e| e.flush())
    }

    pub fn merge(&self, expunge: bool) -> StoreResult<MergeReport> {
        self.both(Operation::Merge { expunge }, |e| e.merge(expunge))
    }

    pub fn clear_caches(&self) -> StoreResult<ClearReport> {
        self.both(Operation::ClearCaches, |e| Ok(e.clear_caches()))
    }

    pub fn cull_logs(
        &self,
        markers: &[String],
        doc_ids: &[String],
        request_id: &str,
    ) -> StoreResult<LogStats> {
        let op = Operation::CullLogs {
            markers: markers.to_vec(),
            doc_ids: doc_ids.to_vec(),
            request_id: request_id.to_string(),
        };
        self.both(op, |e| e.cull_logs(markers, doc_ids, request_id))
    }

    pub fn expire_logs(&self, now: Timestamp) -> StoreResult<LogStats> {
        self.both(Operation::ExpireLogs { now }, |e| e.expire_logs(now))
    }

    pub fn snapshot_create(&self) -> StoreResult<SnapshotMeta> {
        let _w = self.write.lock();
        self.guard_strict()?;
        let meta = self.primary.snapshot_create(None)?;
        self.push(Operation::SnapshotCreate {
            id: meta.id.clone(),
        })?;
        Ok(meta)
    }

    pub fn snapshot_restore(&self, id: &str) -> StoreResult<()> {
        self.both(Operation::SnapshotRestore { id: id.to_string() }, |e| {
            e.snapshot_restore(id)
        })
    }

    pub fn snapshot_rewrite(&self, id: &str, selector: &Selector) -> StoreResult<SnapshotMeta> {
        let _w = self.write.lock();
        self.guard_strict()?;
        let meta = self.primary.snapshot_rewrite(id, selector, None)?;
        self.push(Operation::SnapshotRewrite {
            id: id.to_string(),
            selector: selector.clone(),
            new_id: meta.id.clone(),
        })?;
        Ok(meta)
    }

    pub fn search(&self, req: &SearchRequest) -> StoreResult<SearchResponse> {
        Ok(self.primary.search(req)?)
    }

    /// Read path served by the replica.
    pub fn search_replica(&self, req: &SearchRequest) -> StoreResult<SearchResponse> {
        Ok(self.replica_checked()?.search(req)?)
    }

    /// True when both copies hold identical segments, tombstones and translog.
    pub fn in_sync(&self) -> bool {
        self.primary.state_digest() == self.replica.state_digest()
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
