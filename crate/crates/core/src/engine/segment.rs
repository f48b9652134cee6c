//! Inverted-index segments.
//!
//! A segment holds stored documents addressed by ordinal, per-field postings
//! and per-field raw values (used by range queries). Sealed segments are
//! immutable; deletions are tracked outside the segment as tombstones.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::ops::Bound;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::document::{DocId, StoredDocument};
use super::error::{EngineError, Result};
use super::query::Query;
use super::text::{literal_prefix, tokenize, wildcard_match, within_edit_distance};

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SegmentId(pub u64);

impl fmt::Display for SegmentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "seg-{:06}", self.0)
    }
}

impl SegmentId {
    pub fn file_name(self) -> String {
        format!("{self}.seg")
    }

    pub fn tombstone_file_name(self) -> String {
        format!("{self}.del")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub ord: u32,
    pub tf: u32,
}

/// Work performed while answering a query. Feeds the benchmark cost model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkStats {
    pub terms_examined: u64,
    pub postings_visited: u64,
    pub docs_loaded: u64,
}

impl WorkStats {
    pub fn add(&mut self, o: &WorkStats) {
        self.terms_examined += o.terms_examined;
        self.postings_visited += o.postings_visited;
        self.docs_loaded += o.docs_loaded;
    }
}

#[derive(Serialize, Deserialize)]
struct SegmentFile {
    segment_id: SegmentId,
    docs: Vec<StoredDocument>,
}

#[derive(Debug, Default)]
pub struct Segment {
    id: SegmentId,
    docs: Vec<StoredDocument>,
    ord_by_id: HashMap<DocId, u32>,
    postings: BTreeMap<String, BTreeMap<String, Vec<Posting>>>,
    values: BTreeMap<String, BTreeMap<String, Vec<u32>>>,
    persisted: Option<PathBuf>,
}

/// Matching ordinals with their scores, sorted by ordinal.
pub type ClauseHits = Vec<(u32, u32)>;

impl Segment {
    pub fn new(id: SegmentId) -> Self {
        Segment {
            id,
            ..Default::default()
        }
    }

    pub fn id(&self) -> SegmentId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn persisted_path(&self) -> Option<&Path> {
        self.persisted.as_deref()
    }

    pub fn docs(&self) -> &[StoredDocument] {
        &self.docs
    }

    pub fn doc(&self, ord: u32) -> &StoredDocument {
        &self.docs[ord as usize]
    }

    pub fn ord_of(&self, id: &DocId) -> Option<u32> {
        self.ord_by_id.get(id).copied()
    }

    pub fn add(&mut self, doc: StoredDocument) -> u32 {
        let ord = self.docs.len() as u32;
        for (field, value) in &doc.doc.fields {
            let mut tfs: BTreeMap<String, u32> = BTreeMap::new();
            for tok in tokenize(value) {
                *tfs.entry(tok).or_default() += 1;
            }
            let dict = self.postings.entry(field.clone()).or_default();
            for (term, tf) in tfs {
                dict.entry(term).or_default().push(Posting { ord, tf });
            }
            self.values
                .entry(field.clone())
                .or_default()
                .entry(value.clone())
                .or_default()
                .push(ord);
        }
        self.ord_by_id.insert(doc.doc.doc_id.clone(), ord);
        self.docs.push(doc);
        ord
    }

    pub fn build(id: SegmentId, docs: impl IntoIterator<Item = StoredDocument>) -> Self {
        let mut seg = Segment::new(id);
        for d in docs {
            seg.add(d);
        }
        seg
    }

    fn dicts<'a>(
        &'a self,
        field: &'a Option<String>,
    ) -> impl Iterator<Item = &'a BTreeMap<String, Vec<Posting>>> + 'a {
        self.postings
            .iter()
            .filter(move |(f, _)| field.as_ref().map_or(true, |want| *f == want))
            .map(|(_, d)| d)
    }

    /// Evaluates one non-aggregate clause against this segment, ignoring deletions.
    pub fn eval(&self, q: &Query, work: &mut WorkStats) -> ClauseHits {
        let mut acc = Accumulator::new(self.docs.len());
        match q {
            Query::BooleanAnd { field, terms } => {
                let mut lists: Vec<ClauseHits> = Vec::with_capacity(terms.len());
                for term in terms {
                    let mut one = Accumulator::new(self.docs.len());
                    for dict in self.dicts(field) {
                        work.terms_examined += 1;
                        if let Some(p) = dict.get(term) {
                            work.postings_visited += p.len() as u64;
                            one.add_postings(p);
                        }
                    }
                    lists.push(one.finish());
                }
                return intersect(lists, work);
            }
            Query::Prefix { field, prefix } => {
                for dict in self.dicts(field) {
                    for (term, p) in
                        dict.range::<str, _>((Bound::Included(prefix.as_str()), Bound::Unbounded))
                    {
                        work.terms_examined += 1;
                        if !term.starts_with(prefix.as_str()) {
                            break;
                        }
                        work.postings_visited += p.len() as u64;
                        acc.add_postings(p);
                    }
                }
            }
            Query::Range { field, gte, lte } => {
                if let Some(vals) = self.values.get(field) {
                    let lo = gte.as_deref().map_or(Bound::Unbounded, Bound::Included);
                    let hi = lte.as_deref().map_or(Bound::Unbounded, Bound::Included);
                    for (_, ords) in vals.range::<str, _>((lo, hi)) {
                        work.terms_examined += 1;
                        work.postings_visited += ords.len() as u64;
                        for &o in ords {
                            acc.add(o, 1);
                        }
                    }
                }
            }
            Query::Fuzzy {
                field,
                term,
                max_edits,
            } => {
                for dict in self.dicts(field) {
                    for (t, p) in dict {
                        work.terms_examined += 1;
                        if within_edit_distance(t, term, *max_edits as usize) {
                            work.postings_visited += p.len() as u64;
                            acc.add_postings(p);
                        }
                    }
                }
            }
            Query::Wildcard { field, pattern } => {
                let prefix = literal_prefix(pattern);
                for dict in self.dicts(field) {
                    for (t, p) in dict.range::<str, _>((Bound::Included(prefix), Bound::Unbounded))
                    {
                        work.terms_examined += 1;
                        if !t.starts_with(prefix) {
                            break;
                        }
                        if wildcard_match(pattern, t) {
                            work.postings_visited += p.len() as u64;
                            acc.add_postings(p);
                        }
                    }
                }
            }
            Query::Aggregate { any_of, .. } => {
                for c in any_of {
                    for (o, s) in self.eval(c, work) {
                        acc.add(o, s);
                    }
                }
            }
        }
        acc.finish()
    }

    /// Every distinct term in a field (or all fields).
    pub fn terms<'a>(&'a self, field: &'a Option<String>) -> impl Iterator<Item = &'a String> + 'a {
        self.dicts(field).flat_map(|d| d.keys())
    }

    pub fn write_to(&mut self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(self.id.file_name());
        write_atomic(
            &path,
            &serde_json::to_vec(&SegmentFile {
                segment_id: self.id,
                docs: self.docs.clone(),
            })?,
        )?;
        self.persisted = Some(path.clone());
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Segment> {
        let bytes = fs::read(path)?;
        let file: SegmentFile =
            serde_json::from_slice(&bytes).map_err(|e| EngineError::Corrupt {
                what: path.display().to_string(),
                reason: e.to_string(),
            })?;
        let mut seg = Segment::build(file.segment_id, file.docs);
        seg.persisted = Some(path.to_path_buf());
        Ok(seg)
    }

    /// Approximate byte footprint of stored content.
    pub fn content_bytes(&self) -> u64 {
        self.docs
            .iter()
            .map(|d| {
                d.doc
                    .fields
                    .iter()
                    .map(|(k, v)| k.len() + v.len())
                    .sum::<usize>() as u64
            })
            .sum()
    }
}

struct Accumulator {
    scores: Vec<u32>,
    touched: Vec<u32>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Accumulator {
            scores: vec![0; n],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, ord: u32, s: u32) {
        let slot = &mut self.scores[ord as usize];
        if *slot == 0 {
            self.touched.push(ord);
        }
        *slot += s.max(1);
    }

    fn add_postings(&mut self, p: &[Posting]) {
        for posting in p {
            self.add(posting.ord, posting.tf);
        }
    }

    fn finish(mut self) -> ClauseHits {
        self.touched.sort_unstable();
        self.touched
            .iter()
            .map(|&o| (o, self.scores[o as usize]))
            .collect()
    }
}

/// Linear merge intersection of ordinal-sorted lists; scores add up.
fn intersect(mut lists: Vec<ClauseHits>, work: &mut WorkStats) -> ClauseHits {
    let Some(mut out) = lists.pop() else {
        return Vec::new();
    };
    for list in lists {
        work.postings_visited += (list.len() + out.len()) as u64;
        let mut merged = Vec::with_capacity(out.len().min(list.len()));
        let (mut i, mut j) = (0, 0);
        while i < out.len() && j < list.len() {
            match out[i].0.cmp(&list[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    merged.push((out[i].0, out[i].1 + list[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out = merged;
    }
    out
}

/// Writes via a temporary sibling and rename so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_data()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
