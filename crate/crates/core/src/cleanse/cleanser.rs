//! Cleansing-delete orchestrator.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use parking_lot::Mutex;

use crate::clock::{SharedClock, Timestamp};
use crate::engine::document::{DocId, DocumentDraft};
use crate::engine::{Engine, Selector};
use crate::subsystems::replica::{Role, Store};

use super::plan::{CleansingPlan, Step, Surface};
use super::receipt::{PropagationReceipt, ReceiptStore, StepStatus};
use super::register::{RegisterEntry, VerificationRegister};
use super::scanner::{ResidueReport, ResidueScanner};
use super::CleanseError;

/// One request taking part in a cleansing run.
#[derive(Debug, Clone)]
pub struct CleanseTarget {
    pub request_id: Option<String>,
    pub selector: Selector,
}

pub struct Cleanser {
    store: Arc<Store>,
    register: VerificationRegister,
    receipts: ReceiptStore,
    clock: SharedClock,
    barrier: Mutex<()>,
    ttl_queue: Mutex<BTreeSet<DocId>>,
    surfaces: Vec<Surface>,
}

impl std::fmt::Debug for Cleanser {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cleanser")
            .field("store", &self.store)
            .finish_non_exhaustive()
    }
}

impl Cleanser {
    /// `root` holds the receipts and verification directories; both sit
    /// outside the store's scanned data directories.
    pub fn open(root: &Path, store: Arc<Store>, clock: SharedClock) -> Result<Self, CleanseError> {
        Ok(Cleanser {
            register: VerificationRegister::open(&root.join("verification"))?,
            receipts: ReceiptStore::open(&root.join("receipts"))?,
            store,
            clock,
            barrier: Mutex::new(()),
            ttl_queue: Mutex::new(BTreeSet::new()),
            surfaces: Surface::ALL.to_vec(),
        })
    }

    pub fn store(&self) -> &Arc<Store> {
        &self.store
    }

    pub fn register(&self) -> &VerificationRegister {
        &self.register
    }

    pub fn receipts(&self) -> &ReceiptStore {
        &self.receipts
    }

    pub fn registered_surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    /// Indexes through the store and records the document's markers.
    pub fn index(&self, draft: DocumentDraft) -> Result<DocId, CleanseError> {
        Ok(self.index_many(vec![draft])?.remove(0))
    }

    pub fn index_many(&self, drafts: Vec<DocumentDraft>) -> Result<Vec<DocId>, CleanseError> {
        let mut ids = Vec::with_capacity(drafts.len());
        let mut entries = Vec::with_capacity(drafts.len());
        for d in drafts {
            let id = self.store.index(d.clone())?;
            entries.push(RegisterEntry::of(&d.into_document(id.clone())));
            ids.push(id);
        }
        self.register.record(entries)?;
        Ok(ids)
    }

    pub fn update(&self, id: DocId, draft: DocumentDraft) -> Result<(), CleanseError> {
        let prior = self.register.get(&id);
        self.store.update(id.clone(), draft.clone())?;
        let mut entry = RegisterEntry::of(&draft.into_document(id));
        if let Some(p) = prior {
            entry.markers.extend(p.markers);
            entry.markers.sort();
            entry.markers.dedup();
        }
        self.register.record(vec![entry])?;
        Ok(())
    }

    /// Documents a selector refers to: live matches plus registered
    /// documents already deleted but not yet verified.
    pub fn targets(&self, sel: &Selector) -> Result<BTreeSet<DocId>, CleanseError> {
        let mut out: BTreeSet<DocId> = self.store.primary().resolve(sel)?.into_iter().collect();
        match sel {
            Selector::DocIds { doc_ids } => {
                out.extend(
                    doc_ids
                        .iter()
                        .filter(|d| self.register.get(d).is_some())
                        .cloned(),
                );
            }
            Selector::Subject { subject_id } => {
                out.extend(self.register.docs_of_subject(subject_id))
            }
            Selector::Query { .. } => {
                for r in self
                    .receipts
                    .all()
                    .into_iter()
                    .filter(|r| &r.selector == sel)
                {
                    out.extend(
                        r.doc_ids
                            .into_iter()
                            .filter(|d| self.register.get(d).is_some()),
                    );
                }
            }
        }
        Ok(out)
    }

    pub fn verify_docs(&self, ids: &BTreeSet<DocId>) -> ResidueReport {
        ResidueScanner::new(&self.register.markers_for(ids)).scan_store(&self.store)
    }

    /// Byte-level residue scan for everything the selector refers to.
    pub fn verify_absence(&self, sel: &Selector) -> Result<ResidueReport, CleanseError> {
        Ok(self.verify_docs(&self.targets(sel)?))
    }

    /// Drops register entries once erasure has been verified.
    pub fn purge(&self, ids: &[DocId]) -> Result<usize, CleanseError> {
        Ok(self.register.purge(ids)?)
    }

    pub fn receipt_status(&self, id: &str) -> Result<PropagationReceipt, CleanseError> {
        self.receipts
            .get(id)
            .ok_or_else(|| CleanseError::NotFound(id.to_string()))
    }

    /// Tombstones the targets and opens one receipt per request, all sharing a run.
    pub fn begin(
        &self,
        targets: Vec<CleanseTarget>,
        deadline: Duration,
    ) -> Result<Vec<PropagationReceipt>, CleanseError> {
        self.begin_with_plan(targets, CleansingPlan::standard(deadline))
    }

    pub fn begin_with_plan(
        &self,
        targets: Vec<CleanseTarget>,
        plan: CleansingPlan,
    ) -> Result<Vec<PropagationReceipt>, CleanseError> {
        let missing = plan.uncovered(&self.surfaces);
        if !missing.is_empty() {
            return Err(CleanseError::PlanIncomplete(missing));
        }
        let _b = self.barrier.lock();
        let now = self.clock.now();
        let mut resolved = Vec::new();
        for t in &targets {
            let ids = self.targets(&t.selector)?;
            self.store.mark_delete(&t.selector)?;
            resolved.push(ids);
        }
        let mut out = Vec::new();
        let mut run_id = String::new();
        for (t, ids) in targets.into_iter().zip(resolved) {
            let id = self.receipts.next_id();
            if run_id.is_empty() {
                run_id = id.clone();
            }
            let mut r = PropagationReceipt::new(
                id,
                run_id.clone(),
                t.request_id,
                t.selector,
                ids.into_iter().collect(),
                &plan,
                now,
            );
            if plan.steps.is_empty() {
                r.finish(now);
            }
            self.receipts.put(&r)?;
            out.push(r);
        }
        Ok(out)
    }

    fn engine_for(&self, copy: Role) -> Result<&Engine, CleanseError> {
        match copy {
            Role::Primary => Ok(self.store.primary()),
            Role::Replica => {
                let e = self.store.replica_checked()?;
                if !self.store.pending().is_empty() {
                    self.store.resync()?;
                }
                Ok(e)
            }
        }
    }

    fn execute(
        &self,
        step: Step,
        copy: Role,
        run: &[PropagationReceipt],
    ) -> Result<(), CleanseError> {
        let engine = self.engine_for(copy)?;
        let ids: BTreeSet<DocId> = run.iter().flat_map(|r| r.doc_ids.iter().cloned()).collect();
        match step {
            Step::ExpungeSegments => {
                engine.merge(true)?;
            }
            Step::ClearCaches => {
                engine.clear_caches();
            }
            Step::FlushTranslog => {
                engine.flush()?;
            }
            Step::RewriteSnapshots => {
                let sel = Selector::DocIds {
                    doc_ids: ids.into_iter().collect(),
                };
                for s in engine.snapshot_list()? {
                    engine.snapshot_rewrite(&s.id, &sel, None)?;
                }
            }
            Step::CullLogs => {
                let markers = self.register.markers_for(&ids);
                let token = run[0]
                    .request_id
                    .clone()
                    .unwrap_or_else(|| run[0].run_id.clone());
                let docs: Vec<String> = ids.iter().map(|d| d.as_str().to_string()).collect();
                engine.cull_logs(&markers, &docs, &token)?;
            }
        }
        Ok(())
    }

    /// Executes the next unfinished step of the run containing `receipt_id`.
    /// Returns the updated receipts of the run.
    pub fn run_next_step(&self, receipt_id: &str) -> Result<Vec<PropagationReceipt>, CleanseError> {
        let _b = self.barrier.lock();
        let first = self.receipt_status(receipt_id)?;
        let mut run = self.receipts.run(&first.run_id);
        let Some(idx) = run[0].next_step() else {
            return Ok(run);
        };
        let (step, copy) = (run[0].steps[idx].step, run[0].steps[idx].copy);
        let outcome = self.execute(step, copy, &run);
        let now = self.clock.now();
        for r in &mut run {
            r.steps[idx].status = match &outcome {
                Ok(()) => StepStatus::Done { at: now },
                Err(e) => StepStatus::Failed {
                    reason: e.to_string(),
                },
            };
            r.finish(now);
            self.receipts.put(r)?;
        }
        match outcome {
            Ok(()) => Ok(run),
            Err(e) => Err(CleanseError::StepFailed {
                step,
                copy,
                reason: e.to_string(),
                receipts: run,
            }),
        }
    }

    /// Runs every remaining step. Steps already done are not repeated.
    pub fn resume(&self, receipt_id: &str) -> Result<Vec<PropagationReceipt>, CleanseError> {
        loop {
            let run = self.run_next_step(receipt_id)?;
            if run[0].all_done() {
                if run.iter().any(|r| r.deadline_met == Some(false)) {
                    return Err(CleanseError::DeadlineExceeded { receipts: run });
                }
                return Ok(run);
            }
        }
    }

    pub fn cleansing_delete(
        &self,
        sel: &Selector,
        deadline: Duration,
    ) -> Result<PropagationReceipt, CleanseError> {
        let r = self.begin(
            vec![CleanseTarget {
                request_id: None,
                selector: sel.clone(),
            }],
            deadline,
        )?;
        Ok(self.resume(&r[0].receipt_id)?.remove(0))
    }

    /// One shared run for many requests; one receipt per request.
    pub fn cleanse_batch(
        &self,
        targets: Vec<CleanseTarget>,
        deadline: Duration,
    ) -> Result<Vec<PropagationReceipt>, CleanseError> {
        if targets.is_empty() {
            return Ok(Vec::new());
        }
        let r = self.begin(targets, deadline)?;
        self.resume(&r[0].receipt_id)
    }

    /// Tombstones expired documents and queues them for the next cleansing run.
    pub fn ttl_sweep(&self, now: Timestamp) -> Result<Vec<DocId>, CleanseError> {
        let ids = self.store.ttl_sweep(now)?;
        self.ttl_queue.lock().extend(ids.iter().cloned());
        Ok(ids)
    }

    pub fn ttl_queue(&self) -> Vec<DocId> {
        self.ttl_queue.lock().iter().cloned().collect()
    }

    /// Cleanses everything queued by TTL sweeps, then verifies and purges it.
    pub fn drain_ttl_queue(
        &self,
        deadline: Duration,
    ) -> Result<Option<PropagationReceipt>, CleanseError> {
        let ids: Vec<DocId> = std::mem::take(&mut *self.ttl_queue.lock())
            .into_iter()
            .collect();
        if ids.is_empty() {
            return Ok(None);
        }
        let sel = Selector::DocIds {
            doc_ids: ids.clone(),
        };
        let receipt = match self.cleansing_delete(&sel, deadline) {
            Ok(r) => r,
            Err(e) => {
                self.ttl_queue.lock().extend(ids);
                return Err(e);
            }
        };
        let set: BTreeSet<DocId> = receipt.doc_ids.iter().cloned().collect();
        if self.verify_docs(&set).is_clean() {
            self.purge(&receipt.doc_ids)?;
        }
        Ok(Some(receipt))
    }
}
