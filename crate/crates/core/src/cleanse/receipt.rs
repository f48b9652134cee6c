//! Propagation receipts and their on-disk store.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::engine::document::DocId;
use crate::engine::error::Result;
use crate::engine::segment::write_atomic;
use crate::engine::Selector;
use crate::subsystems::replica::Role;

use super::plan::{CleansingPlan, Step};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum StepStatus {
    Pending,
    Done { at: Timestamp },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: Step,
    pub copy: Role,
    #[serde(flatten)]
    pub status: StepStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationReceipt {
    pub receipt_id: String,
    /// Receipts cleansed together share a run id.
    pub run_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    pub selector: Selector,
    pub doc_ids: Vec<DocId>,
    pub steps: Vec<StepRecord>,
    pub started_at: Timestamp,
    pub completed_at: Option<Timestamp>,
    pub deadline_ms: u64,
    pub deadline_met: Option<bool>,
}

impl PropagationReceipt {
    pub fn new(
        receipt_id: String,
        run_id: String,
        request_id: Option<String>,
        selector: Selector,
        doc_ids: Vec<DocId>,
        plan: &CleansingPlan,
        started_at: Timestamp,
    ) -> Self {
        PropagationReceipt {
            receipt_id,
            run_id,
            request_id,
            selector,
            doc_ids,
            steps: plan
                .steps
                .iter()
                .map(|&(step, copy)| StepRecord {
                    step,
                    copy,
                    status: StepStatus::Pending,
                })
                .collect(),
            started_at,
            completed_at: None,
            deadline_ms: plan.deadline.as_millis() as u64,
            deadline_met: None,
        }
    }

    pub fn next_step(&self) -> Option<usize> {
        self.steps
            .iter()
            .position(|s| !matches!(s.status, StepStatus::Done { .. }))
    }

    pub fn all_done(&self) -> bool {
        self.next_step().is_none()
    }

    pub fn failed(&self) -> Option<&StepRecord> {
        self.steps
            .iter()
            .find(|s| matches!(s.status, StepStatus::Failed { .. }))
    }

    /// Sets completion fields once every step is done.
    pub fn finish(&mut self, now: Timestamp) {
        if self.all_done() && self.completed_at.is_none() {
            self.completed_at = Some(now);
            self.deadline_met =
                Some(now.since(self.started_at).as_millis() as u64 <= self.deadline_ms);
        }
    }
}

#[derive(Debug)]
pub struct ReceiptStore {
    dir: PathBuf,
    inner: Mutex<(u64, BTreeMap<String, PropagationReceipt>)>,
}

impl ReceiptStore {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut map = BTreeMap::new();
        for entry in fs::read_dir(dir)? {
            let p = entry?.path();
            if p.extension().and_then(|e| e.to_str()) == Some("json") {
                let r: PropagationReceipt = serde_json::from_slice(&fs::read(&p)?)?;
                map.insert(r.receipt_id.clone(), r);
            }
        }
        let next = map
            .keys()
            .filter_map(|k| k.strip_prefix("rcpt-").and_then(|n| n.parse::<u64>().ok()))
            .max()
            .unwrap_or(0)
            + 1;
        Ok(ReceiptStore {
            dir: dir.to_path_buf(),
            inner: Mutex::new((next, map)),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn next_id(&self) -> String {
        let mut g = self.inner.lock();
        let id = format!("rcpt-{:06}", g.0);
        g.0 += 1;
        id
    }

    pub fn put(&self, r: &PropagationReceipt) -> Result<()> {
        write_atomic(
            &self.dir.join(format!("{}.json", r.receipt_id)),
            &serde_json::to_vec_pretty(r)?,
        )?;
        self.inner.lock().1.insert(r.receipt_id.clone(), r.clone());
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<PropagationReceipt> {
        self.inner.lock().1.get(id).cloned()
    }

    pub fn run(&self, run_id: &str) -> Vec<PropagationReceipt> {
        self.inner
            .lock()
            .1
            .values()
            .filter(|r| r.run_id == run_id)
            .cloned()
            .collect()
    }

    pub fn all(&self) -> Vec<PropagationReceipt> {
        self.inner.lock().1.values().cloned().collect()
    }
}
