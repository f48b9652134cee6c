//! Document store and search engine.
//!
//! Documents land in an in-memory buffer segment (searchable immediately) and
//! are sealed into immutable segments. Deletion only adds tombstones; content
//! stays in segment files until a merge with `expunge` rewrites them.
//!
//! Directory layout:
//!
//! ```text
//! segments/seg-NNNNNN.seg   stored documents (JSON)
//! segments/seg-NNNNNN.del   tombstone sidecar
//! segments/commit.json      committed segment list and counters
//! translog/translog.tlog    write-ahead log
//! logs/engine.log           event log
//! snapshots/                snapshot repository
//! ```

pub mod document;
pub mod error;
pub mod query;
pub mod segment;
pub mod text;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::{SharedClock, Timestamp};
use crate::subsystems::cache::{CacheStats, QueryCache, RequestCache};
use crate::subsystems::eventlog::{EventLog, LogLevel, LogStats};
use crate::subsystems::snapshot::{SnapshotMeta, SnapshotRepo};
use crate::subsystems::translog::{Translog, TranslogEntry, TranslogOp};

use document::{DocId, Document, DocumentDraft, StoredDocument, SubjectId};
use error::{EngineError, Result};
use query::{Query, SearchRequest};
use segment::{write_atomic, ClauseHits, Segment, SegmentId, WorkStats};

pub const SEGMENTS_DIR: &str = "segments";
pub const TRANSLOG_DIR: &str = "translog";
pub const LOGS_DIR: &str = "logs";
pub const SNAPSHOTS_DIR: &str = "snapshots";
const COMMIT_FILE: &str = "commit.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub seal_threshold: usize,
    pub flush_threshold_bytes: u64,
    pub pii_denylist: Vec<String>,
    pub request_cache_capacity: usize,
    pub query_cache_capacity: usize,
    pub log_level: LogLevel,
    #[serde(with = "crate::clock::duration_ms::option")]
    pub log_retention: Option<Duration>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seal_threshold: 1000,
            flush_threshold_bytes: 1 << 20,
            pii_denylist: vec!["email".into(), "phone".into()],
            request_cache_capacity: 1024,
            query_cache_capacity: 4096,
            log_level: LogLevel::Info,
            log_retention: Some(crate::clock::days(30)),
        }
    }
}

/// What a deletion applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum Selector {
    DocIds { doc_ids: Vec<DocId> },
    Subject { subject_id: SubjectId },
    Query { query: Query },
}

impl Selector {
    pub fn doc(id: impl Into<String>) -> Selector {
        Selector::DocIds {
            doc_ids: vec![DocId::new(id)],
        }
    }

    pub fn subject(id: impl Into<String>) -> Selector {
        Selector::Subject {
            subject_id: SubjectId::new(id),
        }
    }

    pub fn empty() -> Selector {
        Selector::DocIds {
            doc_ids: Vec::new(),
        }
    }
}

/// A write before it has been assigned sequence numbers.
#[derive(Debug, Clone)]
pub enum Mutation {
    Index(DocumentDraft),
    Update(DocId, DocumentDraft),
    Delete(Selector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheOutcome {
    Hit,
    Miss,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hit {
    pub doc_id: DocId,
    pub score: u32,
    pub source: Document,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub key: String,
    pub doc_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub total: usize,
    pub hits: Vec<Hit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buckets: Vec<Bucket>,
    pub stats: WorkStats,
    pub cache: CacheOutcome,
}

impl SearchResponse {
    pub fn doc_ids(&self) -> Vec<DocId> {
        self.hits.iter().map(|h| h.doc_id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub segments_before: usize,
    pub segments_after: usize,
    pub docs_rewritten: usize,
    pub docs_expunged: usize,
    pub bytes_reclaimed: u64,
    pub duration_ms: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlushReport {
    pub committed_seq: u64,
    pub translog_bytes_before: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClearReport {
    pub request_entries: usize,
    pub query_entries: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub segments: usize,
    pub live_docs: usize,
    pub tombstoned_docs: usize,
    pub translog_bytes: u64,
    pub generation: u64,
    pub applied_seq: u64,
    pub committed_seq: u64,
    pub request_cache: CacheStats,
    pub query_cache: CacheStats,
}

/// Fault injection switches used by tests and drills.
#[derive(Debug, Default)]
pub struct Faults {
    /// Snapshot rewrite fails after building the replacement, before the swap.
    pub fail_snapshot_rewrite: AtomicBool,
    /// Snapshot rewrite succeeds but leaves the old snapshot directory behind.
    pub leave_stray_snapshot: AtomicBool,
}

#[derive(Debug, Serialize, Deserialize, Default)]
struct CommitPoint {
    segments: Vec<SegmentId>,
    committed_seq: u64,
    next_doc_seq: u64,
    next_segment_id: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct TombstoneRecord {
    doc_id: DocId,
    ord: u32,
}

#[derive(Debug, Clone)]
struct Sealed {
    seg: Arc<Segment>,
    tombstones: BTreeSet<u32>,
    dirty: bool,
}

#[derive(Debug)]
struct Writer {
    translog: Translog,
    next_seq: u64,
    next_doc: u64,
}

#[derive(Debug, Default)]
struct State {
    sealed: Vec<Sealed>,
    buffer: Segment,
    buffer_tombstones: BTreeSet<u32>,
    next_segment_id: u64,
    generation: u64,
    applied_seq: u64,
    committed_seq: u64,
    locations: HashMap<DocId, (SegmentId, u32)>,
    tags: HashMap<SubjectId, BTreeSet<DocId>>,
    expiry: BTreeSet<(Timestamp, DocId)>,
}

impl State {
    fn doc_at(&self, (seg, ord): (SegmentId, u32)) -> &StoredDocument {
        if seg == self.buffer.id() {
            return self.buffer.doc(ord);
        }
        self.sealed
            .iter()
            .find(|s| s.seg.id() == seg)
            .expect("location points at a live segment")
            .seg
            .doc(ord)
    }

    fn live(&self, id: &DocId) -> Option<&StoredDocument> {
        self.locations.get(id).map(|&l| self.doc_at(l))
    }

    fn index_doc(&mut self, stored: &StoredDocument, loc: (SegmentId, u32)) {
        let id = stored.doc.doc_id.clone();
        for s in stored.doc.subjects() {
            self.tags.entry(s).or_default().insert(id.clone());
        }
        if let Some(exp) = stored.expires_at() {
            self.expiry.insert((exp, id.clone()));
        }
        self.locations.insert(id, loc);
    }

    fn tombstone(&mut self, id: &DocId) -> bool {
        let Some((seg, ord)) = self.locations.remove(id) else {
            return false;
        };
        let stored = self.doc_at((seg, ord)).clone();
        for s in stored.doc.subjects() {
            if let Some(set) = self.tags.get_mut(&s) {
                set.remove(id);
                if set.is_empty() {
                    self.tags.remove(&s);
                }
            }
        }
        if let Some(exp) = stored.expires_at() {
            self.expiry.remove(&(exp, id.clone()));
        }
        if seg == self.buffer.id() {
            self.buffer_tombstones.insert(ord);
        } else if let Some(s) = self.sealed.iter_mut().find(|s| s.seg.id() == seg) {
            s.tombstones.insert(ord);
            s.dirty = true;
        }
        true
    }

    fn alloc_segment(&mut self) -> SegmentId {
        let id = SegmentId(self.next_segment_id);
        self.next_segment_id += 1;
        id
    }

    fn rebuild_indexes(&mut self) {
        self.locations.clear();
        self.tags.clear();
        self.expiry.clear();
        let mut live = Vec::new();
        for s in &self.sealed {
            for (ord, d) in s.seg.docs().iter().enumerate() {
                if !s.tombstones.contains(&(ord as u32)) {
                    live.push((d.clone(), (s.seg.id(), ord as u32)));
                }
            }
        }
        for (ord, d) in self.buffer.docs().iter().enumerate() {
            if !self.buffer_tombstones.contains(&(ord as u32)) {
                live.push((d.clone(), (self.buffer.id(), ord as u32)));
            }
        }
        for (d, loc) in live {
            self.index_doc(&d, loc);
        }
    }
}

struct Caches {
    request: RequestCache<SearchResponse>,
    query: QueryCache,
}

pub struct Engine {
    dir: PathBuf,
    config: EngineConfig,
    clock: SharedClock,
    writer: Mutex<Writer>,
    state: RwLock<State>,
    caches: Mutex<Caches>,
    log: EventLog,
    merging: AtomicBool,
    snapshots: SnapshotRepo,
    pub faults: Faults,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("dir", &self.dir)
            .finish_non_exhaustive()
    }
}

impl Engine {
    /// Opens an engine directory, recovering committed segments and replaying the translog.
    pub fn open(dir: impl AsRef<Path>, config: EngineConfig, clock: SharedClock) -> Result<Engine> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(dir.join(SEGMENTS_DIR))?;
        let log = EventLog::open(
            &dir.join(LOGS_DIR).join("engine.log"),
            config.log_level,
            config.log_retention,
        )?;
        let (translog, _) = Translog::open(&dir.join(TRANSLOG_DIR).join("translog.tlog"))?;
        let snapshots = SnapshotRepo::open(&dir.join(SNAPSHOTS_DIR))?;
        let engine = Engine {
            caches: Mutex::new(Caches {
                request: RequestCache::new(config.request_cache_capacity),
                query: QueryCache::new(config.query_cache_capacity),
            }),
            dir,
            config,
            clock,
            writer: Mutex::new(Writer {
                translog,
                next_seq: 1,
                next_doc: 1,
            }),
            state: RwLock::new(State::default()),
            log,
            merging: AtomicBool::new(false),
            snapshots,
            faults: Faults::default(),
        };
        engine.recover()?;
        Ok(engine)
    }

    fn segments_dir(&self) -> PathBuf {
        self.dir.join(SEGMENTS_DIR)
    }

    fn recover(&self) -> Result<()> {
        let mut w = self.writer.lock();
        let seg_dir = self.segments_dir();
        let commit: CommitPoint = match fs::read(seg_dir.join(COMMIT_FILE)) {
            Ok(b) => serde_json::from_slice(&b).map_err(|e| EngineError::Corrupt {
                what: COMMIT_FILE.into(),
                reason: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => CommitPoint::default(),
            Err(e) => return Err(e.into()),
        };
        let mut sealed = Vec::new();
        for id in &commit.segments {
            let seg = Segment::load(&seg_dir.join(id.file_name()))?;
            let mut tombstones = BTreeSet::new();
            if let Ok(b) = fs::read(seg_dir.join(id.tombstone_file_name())) {
                let recs: Vec<TombstoneRecord> =
                    serde_json::from_slice(&b).map_err(|e| EngineError::Corrupt {
                        what: id.tombstone_file_name(),
                        reason: e.to_string(),
                    })?;
                tombstones.extend(recs.into_iter().map(|r| r.ord));
            }
            sealed.push(Sealed {
                seg: Arc::new(seg),
                tombstones,
                dirty: false,
            });
        }
        // Files not named by the commit point are leftovers of an interrupted commit or merge.
        let keep: BTreeSet<String> = commit
            .segments
            .iter()
            .flat_map(|id| [id.file_name(), id.tombstone_file_name()])
            .chain([COMMIT_FILE.to_string()])
            .collect();
        for entry in fs::read_dir(&seg_dir)? {
            let entry = entry?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !keep.contains(&name) {
                fs::remove_file(entry.path())?;
            }
        }
        {
            let mut st = self.state.write();
            *st = State::default();
            st.sealed = sealed;
            st.next_segment_id = commit.next_segment_id.max(1);
            let buf_id = st.alloc_segment();
            st.buffer = Segment::new(buf_id);
            st.committed_seq = commit.committed_seq;
            st.applied_seq = commit.committed_seq;
            st.rebuild_indexes();
        }
        w.next_doc = commit.next_doc_seq.max(1);
        w.next_seq = commit.committed_seq + 1;
        let (_, entries) = Translog::open(w.translog.path())?;
        for e in entries.iter().filter(|e| e.seq_no > commit.committed_seq) {
            self.apply_in_memory(&mut w, e)?;
        }
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn clock(&self) -> &SharedClock {
        &self.clock
    }

    pub fn event_log(&self) -> &EventLog {
        &self.log
    }

    pub fn snapshot_repo(&self) -> &SnapshotRepo {
        &self.snapshots
    }

    // ----- writes -------------------------------------------------------

    pub fn index(&self, draft: DocumentDraft) -> Result<DocId> {
        let mut w = self.writer.lock();
        let entry = self
            .prepare_locked(&mut w, Mutation::Index(draft))?
            .expect("index always yields an entry");
        self.apply_locked(&mut w, &entry)?;
        match entry.op {
            TranslogOp::Index { doc } => Ok(doc.doc_id),
            _ => unreachable!(),
        }
    }

    pub fn update(&self, id: DocId, draft: DocumentDraft) -> Result<()> {
        self.mutate(Mutation::Update(id, draft)).map(|_| ())
    }

    /// Tombstones every live document matched by the selector.
    pub fn mark_delete(&self, selector: &Selector) -> Result<Vec<DocId>> {
        let entry = self.mutate(Mutation::Delete(selector.clone()))?;
        Ok(match entry {
            Some(TranslogEntry {
                op: TranslogOp::MarkDelete { doc_ids },
                ..
            }) => doc_ids,
            _ => Vec::new(),
        })
    }

    fn mutate(&self, m: Mutation) -> Result<Option<TranslogEntry>> {
        let mut w = self.writer.lock();
        let entry = self.prepare_locked(&mut w, m)?;
        if let Some(e) = &entry {
            self.apply_locked(&mut w, e)?;
        }
        Ok(entry)
    }

    /// Validates a mutation and assigns its sequence number and document id
    /// without applying it. `None` means there is nothing to do.
    pub fn prepare(&self, m: Mutation) -> Result<Option<TranslogEntry>> {
        let mut w = self.writer.lock();
        self.prepare_locked(&mut w, m)
    }

    fn prepare_locked(&self, w: &mut Writer, m: Mutation) -> Result<Option<TranslogEntry>> {
        let op = match m {
            Mutation::Index(draft) => {
                draft.validate(&self.config.pii_denylist)?;
                let values: BTreeSet<&String> = draft.fields.values().collect();
                let mut id = DocId::from_seq(w.next_doc);
                while values.contains(&id.as_str().to_string()) {
                    w.next_doc += 1;
                    id = DocId::from_seq(w.next_doc);
                }
                w.next_doc += 1;
                TranslogOp::Index {
                    doc: draft.into_document(id),
                }
            }
            Mutation::Update(id, draft) => {
                draft.validate(&self.config.pii_denylist)?;
                if draft.fields.values().any(|v| v == id.as_str()) {
                    return Err(EngineError::InvalidTag {
                        field: "doc_id".into(),
                        reason: "identifier equals a field value".into(),
                    });
                }
                TranslogOp::Update {
                    doc: draft.into_document(id),
                }
            }
            Mutation::Delete(sel) => {
                let doc_ids = self.resolve(&sel)?;
                if doc_ids.is_empty() {
                    return Ok(None);
                }
                TranslogOp::MarkDelete { doc_ids }
            }
        };
        let entry = TranslogEntry {
            seq_no: w.next_seq,
            timestamp: self.clock.now(),
            op,
        };
        w.next_seq += 1;
        Ok(Some(entry))
    }

    /// Applies a prepared entry: persists it to the translog, then updates
    /// in-memory state. Replicas receive the primary's entries through here.
    pub fn apply(&self, entry: &TranslogEntry) -> Result<()> {
        let mut w = self.writer.lock();
        self.apply_locked(&mut w, entry)
    }

    fn apply_locked(&self, w: &mut Writer, entry: &TranslogEntry) -> Result<()> {
        if let TranslogOp::Index { doc } = &entry.op {
            if self.state.read().locations.contains_key(&doc.doc_id) {
                return Err(EngineError::DuplicateId(doc.doc_id.clone()));
            }
        }
        w.translog.append(entry)?;
        self.apply_in_memory(w, entry)?;
        self.log_entry(entry)?;
        if self.state.read().buffer.len() >= self.config.seal_threshold {
            self.commit_locked(w)?;
        }
        if w.translog.size_bytes() >= self.config.flush_threshold_bytes {
            self.commit_locked(w)?;
            w.translog.truncate()?;
        }
        Ok(())
    }

    fn apply_in_memory(&self, w: &mut Writer, entry: &TranslogEntry) -> Result<()> {
        w.next_seq = w.next_seq.max(entry.seq_no + 1);
        let mut st = self.state.write();
        match &entry.op {
            TranslogOp::Index { doc } | TranslogOp::Update { doc } => {
                if let Some(n) = doc.doc_id.seq() {
                    w.next_doc = w.next_doc.max(n + 1);
                }
                if matches!(entry.op, TranslogOp::Update { .. }) {
                    st.tombstone(&doc.doc_id);
                } else if st.locations.contains_key(&doc.doc_id) {
                    return Err(EngineError::DuplicateId(doc.doc_id.clone()));
                }
                let stored = StoredDocument {
                    doc: doc.clone(),
                    indexed_at: entry.timestamp,
                };
                let ord = st.buffer.add(stored.clone());
                let loc = (st.buffer.id(), ord);
                st.index_doc(&stored, loc);
            }
            TranslogOp::MarkDelete { doc_ids } => {
                for id in doc_ids {
                    st.tombstone(id);
                }
            }
        }
        st.applied_seq = st.applied_seq.max(entry.seq_no);
        st.generation += 1;
        Ok(())
    }

    fn log_entry(&self, entry: &TranslogEntry) -> Result<()> {
        let ts = entry.timestamp;
        match &entry.op {
            TranslogOp::Index { doc } | TranslogOp::Update { doc } => {
                let code = if matches!(entry.op, TranslogOp::Index { .. }) {
                    "index"
                } else {
                    "update"
                };
                let fields: Vec<&str> = doc.fields.keys().map(String::as_str).collect();
                let summary = format!(
                    "seq={} doc={} fields={}",
                    entry.seq_no,
                    doc.doc_id,
                    fields.join(",")
                );
                let detail = serde_json::to_string(&doc.fields)?;
                self.log.event(ts, code, &summary, Some(&detail))
            }
            TranslogOp::MarkDelete { doc_ids } => {
                let ids: Vec<&str> = doc_ids.iter().map(DocId::as_str).collect();
                self.log.event(
                    ts,
                    "mark_delete",
                    &format!("seq={} docs={}", entry.seq_no, ids.join(",")),
                    None,
                )
            }
        }
    }

    /// Resolves a selector to the currently live documents it names.
    pub fn resolve(&self, sel: &Selector) -> Result<Vec<DocId>> {
        Ok(match sel {
            Selector::DocIds { doc_ids } => {
                let st = self.state.read();
                let mut out: Vec<DocId> = doc_ids
                    .iter()
                    .filter(|d| st.locations.contains_key(*d))
                    .cloned()
                    .collect();
                out.sort_by(doc_order);
                out.dedup();
                out
            }
            Selector::Subject { subject_id } => self.docs_of_subject(subject_id),
            Selector::Query { query } => {
                let mut ids = self
                    .execute(&SearchRequest::all(query.clone()), false)?
                    .doc_ids();
                ids.sort_by(doc_order);
                ids
            }
        })
    }

    /// Documents whose expiry has passed at `now`.
    pub fn expired_at(&self, now: Timestamp) -> Vec<DocId> {
        let st = self.state.read();
        let mut ids: Vec<DocId> = st
            .expiry
            .iter()
            .take_while(|(e, _)| *e <= now)
            .map(|(_, d)| d.clone())
            .collect();
        ids.sort_by(doc_order);
        ids
    }

    /// Tombstones every document expired at `now`. Idempotent for a fixed `now`.
    pub fn ttl_sweep(&self, now: Timestamp) -> Result<Vec<DocId>> {
        let ids = self.expired_at(now);
        if ids.is_empty() {
            return Ok(ids);
        }
        self.mark_delete(&Selector::DocIds { doc_ids: ids })
    }

    // ----- reads --------------------------------------------------------

    pub fn get(&self, id: &DocId) -> Option<StoredDocument> {
        self.state.read().live(id).cloned()
    }

    pub fn docs_of_subject(&self, s: &SubjectId) -> Vec<DocId> {
        let st = self.state.read();
        let mut ids: Vec<DocId> = st
            .tags
            .get(s)
            .map(|set| set.iter().cloned().collect())
            .unwrap_or_default();
        ids.sort_by(doc_order);
        ids
    }

    /// Every live (not tombstoned) document, expired or not, in id order.
    pub fn live_docs(&self) -> Vec<StoredDocument> {
        let st = self.state.read();
        let mut docs: Vec<StoredDocument> = st
            .locations
            .values()
            .map(|&l| st.doc_at(l).clone())
            .collect();
        docs.sort_by(|a, b| doc_order(&a.doc.doc_id, &b.doc.doc_id));
        docs
    }

    pub fn search(&self, req: &SearchRequest) -> Result<SearchResponse> {
        self.execute(req, true)
    }

    fn execute(&self, req: &SearchRequest, use_request_cache: bool) -> Result<SearchResponse> {
        let query = req.query.normalized()?;
        let now = self.clock.now();
        let st = self.state.read();
        let key = RequestCache::<SearchResponse>::key(st.generation, req.size, &query.canonical());
        if use_request_cache {
            if let Some(mut cached) = self.caches.lock().request.get(&key, now) {
                cached.stats = WorkStats::default();
                cached.cache = CacheOutcome::Hit;
                return Ok(cached);
            }
        }
        let clauses: Vec<&Query> = match &query {
            Query::Aggregate { any_of, .. } => any_of.iter().collect(),
            q => vec![q],
        };
        let mut work = WorkStats::default();
        let mut matched: Vec<(DocId, u32, &StoredDocument)> = Vec::new();
        let mut valid_until: Option<Timestamp> = None;
        for s in &st.sealed {
            let mut hits = BTreeMap::new();
            for c in &clauses {
                let canon = c.canonical();
                let cached = self.caches.lock().query.get(s.seg.id(), &canon);
                let list = match cached {
                    Some(l) => l,
                    None => {
                        let l = Arc::new(s.seg.eval(c, &mut work));
                        self.caches.lock().query.put(s.seg.id(), canon, l.clone());
                        l
                    }
                };
                merge_into(&mut hits, &list);
            }
            collect_live(
                &s.seg,
                &s.tombstones,
                hits,
                now,
                &mut matched,
                &mut valid_until,
            );
        }
        let mut hits = BTreeMap::new();
        for c in &clauses {
            merge_into(&mut hits, &st.buffer.eval(c, &mut work));
        }
        collect_live(
            &st.buffer,
            &st.buffer_tombstones,
            hits,
            now,
            &mut matched,
            &mut valid_until,
        );

        matched.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| doc_order(&a.0, &b.0)));
        let buckets = match &query {
            Query::Aggregate { group_by, .. } => {
                let mut counts: HashMap<String, usize> = HashMap::new();
                for (_, _, d) in &matched {
                    work.docs_loaded += 1;
                    if let Some(v) = d.doc.fields.get(group_by) {
                        let toks: BTreeSet<String> = text::tokenize(v).into_iter().collect();
                        for t in toks {
                            *counts.entry(t).or_default() += 1;
                        }
                    }
                }
                let mut b: Vec<Bucket> = counts
                    .into_iter()
                    .map(|(key, doc_count)| Bucket { key, doc_count })
                    .collect();
                b.sort_by(|x, y| {
                    y.doc_count
                        .cmp(&x.doc_count)
                        .then_with(|| x.key.cmp(&y.key))
                });
                b.truncate(10);
                b
            }
            _ => Vec::new(),
        };
        let total = matched.len();
        let hits: Vec<Hit> = matched
            .into_iter()
            .take(req.size)
            .map(|(doc_id, score, d)| {
                work.docs_loaded += 1;
                Hit {
                    doc_id,
                    score,
                    source: d.doc.clone(),
                }
            })
            .collect();
        let resp = SearchResponse {
            total,
            hits,
            buckets,
            stats: work,
            cache: CacheOutcome::Miss,
        };
        if use_request_cache {
            self.caches
                .lock()
                .request
                .put(key, resp.clone(), valid_until);
        }
        Ok(resp)
    }

    // ----- maintenance --------------------------------------------------

    /// Seals the buffer and persists segments, tombstones and the commit point.
    /// The translog is left untouched; entries at or below the committed
    /// sequence number are skipped on replay.
    fn commit_locked(&self, _w: &mut Writer) -> Result<u64> {
        let seg_dir = self.segments_dir();
        let mut st = self.state.write();
        if !st.buffer.is_empty() {
            let next = st.alloc_segment();
            let mut seg = std::mem::replace(&mut st.buffer, Segment::new(next));
            let tombstones = std::mem::take(&mut st.buffer_tombstones);
            seg.write_to(&seg_dir)?;
            st.sealed.push(Sealed {
                seg: Arc::new(seg),
                tombstones,
                dirty: true,
            });
        } else {
            st.buffer_tombstones.clear();
        }
        for s in st.sealed.iter_mut().filter(|s| s.dirty) {
            write_tombstones(&seg_dir, s)?;
            s.dirty = false;
        }
        st.committed_seq = st.applied_seq;
        let commit = CommitPoint {
            segments: st.sealed.iter().map(|s| s.seg.id()).collect(),
            committed_seq: st.committed_seq,
            next_doc_seq: _w.next_doc,
            next_segment_id: st.next_segment_id,
        };
        write_atomic(
            &seg_dir.join(COMMIT_FILE),
            &serde_json::to_vec_pretty(&commit)?,
        )?;
        Ok(st.committed_seq)
    }

    /// Commits all pending operations to segments and truncates the translog.
    pub fn flush(&self) -> Result<FlushReport> {
        let mut w = self.writer.lock();
        self.flush_locked(&mut w)
    }

    fn flush_locked(&self, w: &mut Writer) -> Result<FlushReport> {
        let before = w.translog.size_bytes();
        let committed_seq = self.commit_locked(w)?;
        w.translog.truncate()?;
        self.log.event(
            self.clock.now(),
            "flush",
            &format!("committed_seq={committed_seq}"),
            None,
        )?;
        Ok(FlushReport {
            committed_seq,
            translog_bytes_before: before,
        })
    }

    /// Merges segments. With `expunge_deletes`, every segment carrying
    /// tombstones is rewritten without the deleted documents and the old
    /// files are removed. Readers keep using the previous segments until the
    /// new set is published.
    pub fn merge(&self, expunge_deletes: bool) -> Result<MergeReport> {
        if self.merging.swap(true, Ordering::AcqRel) {
            return Err(EngineError::MergeInProgress);
        }
        let res = {
            let mut w = self.writer.lock();
            self.merge_locked(&mut w, expunge_deletes)
        };
        self.merging.store(false, Ordering::Release);
        res
    }

    pub fn is_merging(&self) -> bool {
        self.merging.load(Ordering::Acquire)
    }

    fn merge_locked(&self, w: &mut Writer, expunge: bool) -> Result<MergeReport> {
        let started = Instant::now();
        self.commit_locked(w)?;
        let seg_dir = self.segments_dir();
        let current: Vec<Sealed> = self.state.read().sealed.clone();
        let before = current.len();
        let small = |s: &Sealed| s.seg.len() < self.config.seal_threshold;
        let selected: Vec<&Sealed> = current
            .iter()
            .filter(|s| (expunge && !s.tombstones.is_empty()) || small(s))
            .collect();
        let small_count = current.iter().filter(|s| small(s)).count();
        if selected.is_empty()
            || (!expunge && small_count < 2 && current.iter().all(|s| s.tombstones.is_empty()))
        {
            return Ok(MergeReport {
                segments_before: before,
                segments_after: before,
                ..Default::default()
            });
        }
        let mut report = MergeReport {
            segments_before: before,
            ..Default::default()
        };
        let mut survivors: Vec<StoredDocument> = Vec::new();
        for s in &selected {
            for (ord, d) in s.seg.docs().iter().enumerate() {
                if s.tombstones.contains(&(ord as u32)) {
                    report.docs_expunged += 1;
                    report.bytes_reclaimed += d
                        .doc
                        .fields
                        .iter()
                        .map(|(k, v)| (k.len() + v.len()) as u64)
                        .sum::<u64>();
                } else {
                    survivors.push(d.clone());
                }
            }
        }
        report.docs_rewritten = survivors.len();
        let mut built = Vec::new();
        {
            let mut st = self.state.write();
            for chunk in survivors.chunks(self.config.seal_threshold.max(1)) {
                let id = st.alloc_segment();
                built.push((id, chunk.to_vec()));
            }
        }
        let mut fresh = Vec::new();
        for (id, docs) in built {
            let mut seg = Segment::build(id, docs);
            seg.write_to(&seg_dir)?;
            fresh.push(Sealed {
                seg: Arc::new(seg),
                tombstones: BTreeSet::new(),
                dirty: false,
            });
        }
        let removed: Vec<SegmentId> = selected.iter().map(|s| s.seg.id()).collect();
        {
            let mut st = self.state.write();
            let pos = st
                .sealed
                .iter()
                .position(|s| removed.contains(&s.seg.id()))
                .unwrap_or(st.sealed.len());
            st.sealed.retain(|s| !removed.contains(&s.seg.id()));
            let at = pos.min(st.sealed.len());
            st.sealed.splice(at..at, fresh);
            st.rebuild_indexes();
            let commit = CommitPoint {
                segments: st.sealed.iter().map(|s| s.seg.id()).collect(),
                committed_seq: st.committed_seq,
                next_doc_seq: w.next_doc,
                next_segment_id: st.next_segment_id,
            };
            write_atomic(
                &seg_dir.join(COMMIT_FILE),
                &serde_json::to_vec_pretty(&commit)?,
            )?;
            report.segments_after = st.sealed.len();
            let live: Vec<SegmentId> = st.sealed.iter().map(|s| s.seg.id()).collect();
            self.caches.lock().query.retain_segments(&live);
        }
        for id in &removed {
            for name in [id.file_name(), id.tombstone_file_name()] {
                match fs::remove_file(seg_dir.join(name)) {
                    Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
                    _ => {}
                }
            }
        }
        report.duration_ms = started.elapsed().as_millis() as u64;
        self.log.event(
            self.clock.now(),
            "merge",
            &format!(
                "expunge={expunge} before={} after={} expunged={}",
                report.segments_before, report.segments_after, report.docs_expunged
            ),
            None,
        )?;
        Ok(report)
    }

    pub fn clear_caches(&self) -> ClearReport {
        let mut c = self.caches.lock();
        let report = ClearReport {
            request_entries: c.request.len(),
            query_entries: c.query.len(),
        };
        c.request.clear();
        c.query.clear();
        report
    }

    /// Raw serialized cache contents, by cache name.
    pub fn cache_dumps(&self) -> Vec<(&'static str, Vec<u8>)> {
        let c = self.caches.lock();
        vec![
            ("request_cache", c.request.dump()),
            ("query_cache", c.query.dump()),
        ]
    }

    pub fn cull_logs(
        &self,
        markers: &[String],
        doc_ids: &[String],
        request_id: &str,
    ) -> Result<LogStats> {
        let _w = self.writer.lock();
        self.log.cull(markers, doc_ids, request_id)
    }

    pub fn expire_logs(&self, now: Timestamp) -> Result<LogStats> {
        let _w = self.writer.lock();
        self.log.expire(now)
    }

    pub fn stats(&self) -> EngineStats {
        let w = self.writer.lock();
        let st = self.state.read();
        let c = self.caches.lock();
        let tombstoned = st.sealed.iter().map(|s| s.tombstones.len()).sum::<usize>()
            + st.buffer_tombstones.len();
        EngineStats {
            segments: st.sealed.len() + usize::from(!st.buffer.is_empty()),
            live_docs: st.locations.len(),
            tombstoned_docs: tombstoned,
            translog_bytes: w.translog.size_bytes(),
            generation: st.generation,
            applied_seq: st.applied_seq,
            committed_seq: st.committed_seq,
            request_cache: c.request.stats(),
            query_cache: c.query.stats(),
        }
    }

    /// Digest of segments, tombstones and translog, for primary/replica comparison.
    pub fn state_digest(&self) -> String {
        let w = self.writer.lock();
        let st = self.state.read();
        let mut h = Sha256::new();
        let mut feed = |seg: &Segment, tomb: &BTreeSet<u32>| {
            h.update(seg.id().0.to_le_bytes());
            for d in seg.docs() {
                h.update(serde_json::to_vec(d).unwrap_or_default());
            }
            for t in tomb {
                h.update(t.to_le_bytes());
            }
            h.update(b"|");
        };
        for s in &st.sealed {
            feed(&s.seg, &s.tombstones);
        }
        feed(&st.buffer, &st.buffer_tombstones);
        h.update(st.applied_seq.to_le_bytes());
        h.update(fs::read(w.translog.path()).unwrap_or_default());
        hex::encode(h.finalize())
    }

    // ----- snapshots ----------------------------------------------------

    /// Flushes, then copies every committed segment file into a new snapshot.
    pub fn snapshot_create(&self, id: Option<String>) -> Result<SnapshotMeta> {
        let mut w = self.writer.lock();
        self.flush_locked(&mut w)?;
        let id = id.unwrap_or_else(|| self.snapshots.next_id());
        let docs = self.state.read().locations.len();
        let meta = self
            .snapshots
            .create(&id, &self.segments_dir(), self.clock.now(), docs)?;
        self.log.event(
            self.clock.now(),
            "snapshot_create",
            &format!("snapshot={id}"),
            None,
        )?;
        Ok(meta)
    }

    pub fn snapshot_list(&self) -> Result<Vec<SnapshotMeta>> {
        self.snapshots.list()
    }

    /// Replaces engine state with a verified snapshot.
    pub fn snapshot_restore(&self, id: &str) -> Result<()> {
        let mut w = self.writer.lock();
        self.snapshots.verify(id)?;
        let seg_dir = self.segments_dir();
        fs::remove_dir_all(&seg_dir)?;
        fs::create_dir_all(&seg_dir)?;
        self.snapshots.copy_out(id, &seg_dir)?;
        w.translog.truncate()?;
        drop(w);
        let generation = self.state.read().generation;
        self.recover()?;
        self.state.write().generation = generation + 1;
        self.clear_caches();
        self.log.event(
            self.clock.now(),
            "snapshot_restore",
            &format!("snapshot={id}"),
            None,
        )?;
        Ok(())
    }

    /// Builds a replacement snapshot without the selected documents: restore
    /// into a scratch engine, delete, flush, expunge, re-snapshot, swap, and
    /// drop the old snapshot. On failure the old snapshot is left in place.
    pub fn snapshot_rewrite(
        &self,
        id: &str,
        selector: &Selector,
        new_id: Option<String>,
    ) -> Result<SnapshotMeta> {
        let _w = self.writer.lock();
        let old = self.snapshots.get(id)?;
        self.snapshots.verify(id)?;
        let new_id = new_id.unwrap_or_else(|| self.snapshots.next_id());
        let scratch_dir = self.snapshots.dir().join(format!(".scratch-{new_id}"));
        let result = (|| -> Result<SnapshotMeta> {
            if scratch_dir.exists() {
                fs::remove_dir_all(&scratch_dir)?;
            }
            fs::create_dir_all(scratch_dir.join(SEGMENTS_DIR))?;
            self.snapshots
                .copy_out(id, &scratch_dir.join(SEGMENTS_DIR))?;
            let scratch_cfg = EngineConfig {
                log_level: LogLevel::Info,
                ..self.config.clone()
            };
            let scratch = Engine::open(&scratch_dir, scratch_cfg, self.clock.clone())?;
            scratch.mark_delete(selector)?;
            scratch.flush()?;
            scratch.merge(true)?;
            let docs = scratch.state.read().locations.len();
            let staged =
                self.snapshots
                    .stage(&new_id, &scratch.segments_dir(), old.created_at, docs)?;
            if self.faults.fail_snapshot_rewrite.load(Ordering::Acquire) {
                self.snapshots.discard_staged(&new_id)?;
                return Err(EngineError::RewriteIncomplete {
                    id: id.to_string(),
                    reason: "injected failure before swap".into(),
                });
            }
            let keep_old = self.faults.leave_stray_snapshot.load(Ordering::Acquire);
            let meta = self.snapshots.swap(id, staged, keep_old)?;
            if !keep_old {
                self.snapshots.remove_orphans()?;
            }
            Ok(meta)
        })();
        let _ = fs::remove_dir_all(&scratch_dir);
        match result {
            Ok(meta) => {
                self.log.event(
                    self.clock.now(),
                    "snapshot_rewrite",
                    &format!("old={id} new={}", meta.id),
                    None,
                )?;
                Ok(meta)
            }
            Err(EngineError::RewriteIncomplete { id, reason }) => {
                Err(EngineError::RewriteIncomplete { id, reason })
            }
            Err(e) => Err(EngineError::RewriteIncomplete {
                id: id.to_string(),
                reason: e.to_string(),
            }),
        }
    }
}

fn collect_live<'a>(
    seg: &'a Segment,
    tombstones: &BTreeSet<u32>,
    hits: BTreeMap<u32, u32>,
    now: Timestamp,
    matched: &mut Vec<(DocId, u32, &'a StoredDocument)>,
    valid_until: &mut Option<Timestamp>,
) {
    for (ord, score) in hits {
        if tombstones.contains(&ord) {
            continue;
        }
        let d = seg.doc(ord);
        if let Some(exp) = d.expires_at() {
            if exp <= now {
                continue;
            }
            *valid_until = Some(valid_until.map_or(exp, |v| v.min(exp)));
        }
        matched.push((d.doc.doc_id.clone(), score, d));
    }
}

fn merge_into(acc: &mut BTreeMap<u32, u32>, hits: &ClauseHits) {
    for &(o, s) in hits {
        *acc.entry(o).or_default() += s;
    }
}

fn write_tombstones(dir: &Path, s: &Sealed) -> Result<()> {
    let path = dir.join(s.seg.id().tombstone_file_name());
    if s.tombstones.is_empty() {
        match fs::remove_file(&path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
            _ => return Ok(()),
        }
    }
    let recs: Vec<TombstoneRecord> = s
        .tombstones
        .iter()
        .map(|&ord| TombstoneRecord {
            doc_id: s.seg.doc(ord).doc.doc_id.clone(),
            ord,
        })
        .collect();
    write_atomic(&path, &serde_json::to_vec(&recs)?)
}

/// Orders generated ids numerically, others lexicographically after them.
pub fn doc_order(a: &DocId, b: &DocId) -> std::cmp::Ordering {
    match (a.seq(), b.seq()) {
        (Some(x), Some(y)) => x.cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.as_str().cmp(b.as_str()),
    }
}
