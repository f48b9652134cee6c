//! Request lifecycle service: intake, acknowledgment, review, execution and
//! honest completion.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cleanse::{CleanseError, CleanseTarget, Cleanser, PropagationReceipt, ResidueReport};
use crate::clock::{days, SharedClock, Timestamp};
use crate::config::{ConfigError, CredentialLevel, ExternalRecipient, SystemConfig};
use crate::engine::document::{DocId, DocumentDraft, SubjectId};
use crate::engine::error::EngineError;
use crate::engine::segment::write_atomic;
use crate::engine::Selector;
use crate::policy::{
    deadline_check, evaluate, validate_decision, DeadlineStatus, DecidedBy, EvaluationContext,
    ExemptionAssertion, GroundClaim, Outcome, PolicyDecision, ResponseTimes, SubjectKind,
    Violation,
};
use crate::subsystems::replica::{Store, StoreError};

use super::audit::AuditLog;
use super::model::*;

#[derive(Debug, Error)]
pub enum LifecycleError {
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("rights require {rights:?} credentials but registration only {registration:?}")]
    DisproportionateVerificationConfig {
        registration: CredentialLevel,
        rights: CredentialLevel,
    },
    #[error("subject cannot be authenticated; request {request_id} parked")]
    UnknownSubject { request_id: String },
    #[error("request {0} not found")]
    NotFound(String),
    #[error("request {request_id} is {state:?}; operation needs {needed}")]
    WrongState {
        request_id: String,
        state: RequestState,
        needed: &'static str,
    },
    #[error("rejection needs a non-empty explanation")]
    MissingExplanation,
    #[error("decision violates policy: {0:?}")]
    InvalidDecision(Vec<Violation>),
    #[error("escalated request {0} needs a decision by a named officer")]
    OfficerRequired(String),
    #[error("residue found on {surfaces} surface(s); request {request_id} stays executing")]
    ResidueDetected {
        request_id: String,
        surfaces: usize,
        report: ResidueReport,
    },
    #[error("cleansing for request {0} has not finished")]
    CleansingPending(String),
    #[error(transparent)]
    Cleanse(#[from] CleanseError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl From<StoreError> for LifecycleError {
    fn from(e: StoreError) -> Self {
        LifecycleError::Cleanse(CleanseError::Store(e))
    }
}

pub type Result<T> = std::result::Result<T, LifecycleError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub subject_id: SubjectId,
    /// Defaults to everything held about the subject.
    #[serde(default)]
    pub selector: Option<Selector>,
    #[serde(default)]
    pub grounds: Vec<GroundClaim>,
    pub credentials: Credentials,
    #[serde(default)]
    pub subject_kind: SubjectKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SubjectRecord {
    level: CredentialLevel,
    secret_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueEntry {
    pub request_id: String,
    /// Pseudonym of the subject id.
    pub subject: String,
    pub grounds: Vec<GroundClaim>,
    pub exemptions: Vec<ExemptionAssertion>,
    pub received_at: Timestamp,
    pub deadline_at: Timestamp,
    /// Whole days left before the decision deadline; negative when overdue.
    pub days_remaining: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickReport {
    pub acknowledged: usize,
    pub reviewed: usize,
    pub batch: Option<BatchReport>,
    pub completed: usize,
    pub residue_blocked: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchReport {
    pub request_ids: Vec<String>,
    pub receipt_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn pseudonym(subject: &SubjectId) -> String {
    format!(
        "subj-{}",
        &hex::encode(Sha256::digest(subject.as_str().as_bytes()))[..10]
    )
}

fn secret_hash(secret: &str) -> String {
    hex::encode(Sha256::digest(secret.as_bytes()))
}

pub struct Service {
    root: PathBuf,
    config: SystemConfig,
    clock: SharedClock,
    cleanser: Arc<Cleanser>,
    audit: AuditLog,
    subjects: RwLock<BTreeMap<SubjectId, SubjectRecord>>,
    requests: RwLock<BTreeMap<String, Arc<Mutex<RtbfRequest>>>>,
    next_request: AtomicU64,
    next_job: AtomicU64,
    outbox: Mutex<Vec<PropagationJob>>,
    warnings: Mutex<BTreeSet<ComplianceWarning>>,
    last_batch: Mutex<Option<Timestamp>>,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service")
            .field("root", &self.root)
            .finish_non_exhaustive()
    }
}

impl Service {
    /// Refuses to start when exercising rights would demand stronger
    /// credentials than creating an account.
    pub fn open(
        root: impl AsRef<Path>,
        config: SystemConfig,
        clock: SharedClock,
    ) -> Result<Service> {
        let v = config.verification;
        if !v.is_proportional() {
            return Err(LifecycleError::DisproportionateVerificationConfig {
                registration: v.registration_level,
                rights: v.rights_level,
            });
        }
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(root.join("requests")).map_err(EngineError::from)?;
        let store = Arc::new(Store::open(
            root.join("data"),
            config.engine_config(),
            config.replication.mode,
            clock.clone(),
        )?);
        let cleanser = Arc::new(Cleanser::open(&root, store, clock.clone())?);
        let audit = AuditLog::open(
            &root.join("audit"),
            days(config.logging.audit_retention_days),
        )?;
        let subjects = match std::fs::read(root.join("subjects.json")) {
            Ok(b) => serde_json::from_slice(&b).unwrap_or_default(),
            Err(_) => BTreeMap::new(),
        };
        let mut requests = BTreeMap::new();
        let mut max_seq = 0;
        for entry in std::fs::read_dir(root.join("requests")).map_err(EngineError::from)? {
            let path = entry.map_err(EngineError::from)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Ok(bytes) = std::fs::read(&path) else {
                continue;
            };
            let Ok(req) = serde_json::from_slice::<RtbfRequest>(&bytes) else {
                continue;
            };
            if let Some(n) = req
                .request_id
                .strip_prefix("req-")
                .and_then(|s| s.parse::<u64>().ok())
            {
                max_seq = max_seq.max(n);
            }
            requests.insert(req.request_id.clone(), Arc::new(Mutex::new(req)));
        }
        Ok(Service {
            root,
            config,
            clock,
            cleanser,
            audit,
            subjects: RwLock::new(subjects),
            requests: RwLock::new(requests),
            next_request: AtomicU64::new(max_seq + 1),
            next_job: AtomicU64::new(1),
            outbox: Mutex::new(Vec::new()),
            warnings: Mutex::new(BTreeSet::new()),
            last_batch: Mutex::new(None),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn cleanser(&self) -> &Arc<Cleanser> {
        &self.cleanser
    }

    pub fn store(&self) -> &Arc<Store> {
        self.cleanser.store()
    }

    pub fn audit(&self) -> &AuditLog {
        &self.audit
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    pub fn outbox(&self) -> Vec<PropagationJob> {
        self.outbox.lock().clone()
    }

    pub fn register_subject(
        &self,
        subject: SubjectId,
        level: CredentialLevel,
        secret: &str,
    ) -> Result<()> {
        let mut s = self.subjects.write();
        s.insert(
            subject,
            SubjectRecord {
                level,
                secret_sha256: secret_hash(secret),
            },
        );
        let bytes = serde_json::to_vec_pretty(&*s).expect("subjects serialize");
        write_atomic(&self.root.join("subjects.json"), &bytes)?;
        Ok(())
    }

    pub fn ingest(&self, draft: DocumentDraft) -> Result<DocId> {
        Ok(self.cleanser.index(draft)?)
    }

    pub fn ingest_many(&self, drafts: Vec<DocumentDraft>) -> Result<Vec<DocId>> {
        Ok(self.cleanser.index_many(drafts)?)
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<RtbfRequest>>> {
        self.requests
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| LifecycleError::NotFound(id.to_string()))
    }

    pub fn get(&self, id: &str) -> Result<RtbfRequest> {
        Ok(self.handle(id)?.lock().clone())
    }

    pub fn list(&self, state: Option<RequestState>) -> Vec<RtbfRequest> {
        let handles: Vec<_> = self.requests.read().values().cloned().collect();
        handles
            .iter()
            .map(|h| h.lock().clone())
            .filter(|r| state.is_none_or(|s| r.state == s))
            .collect()
    }

    fn ids_in(&self, state: RequestState) -> Vec<String> {
        self.list(Some(state))
            .into_iter()
            .map(|r| r.request_id)
            .collect()
    }

    fn persist(&self, req: &RtbfRequest) -> Result<()> {
        let bytes = serde_json::to_vec_pretty(req).expect("requests serialize");
        write_atomic(
            &self
                .root
                .join("requests")
                .join(format!("{}.json", req.request_id)),
            &bytes,
        )?;
        Ok(())
    }

    /// Moves a request one step along its path, with exactly one audit record.
    fn transition(
        &self,
        req: &mut RtbfRequest,
        next: RequestState,
        details: Vec<(String, String)>,
    ) -> Result<()> {
        if !req.state.can_move_to(next) {
            return Err(LifecycleError::WrongState {
                request_id: req.request_id.clone(),
                state: req.state,
                needed: "a permitted transition",
            });
        }
        let last = req.history.last().map(|t| t.at).unwrap_or(req.received_at);
        let at = self.now().max(last);
        req.state = next;
        req.history.push(Transition { state: next, at });
        let mut d = vec![("state".to_string(), next.as_str().to_string())];
        d.extend(details);
        self.audit
            .append(at, &req.request_id, &format!("state:{}", next.as_str()), d)?;
        self.persist(req)
    }

    fn wrong(req: &RtbfRequest, needed: &'static str) -> LifecycleError {
        LifecycleError::WrongState {
            request_id: req.request_id.clone(),
            state: req.state,
            needed,
        }
    }

    fn check_credentials(&self, sub: &SubmitRequest) -> std::result::Result<bool, LifecycleError> {
        let needed = self.config.verification.rights_level;
        if sub.credentials.level < needed {
            return Err(LifecycleError::VerificationFailed(format!(
                "credentials of level {:?} presented, {:?} required",
                sub.credentials.level, needed
            )));
        }
        let subjects = self.subjects.read();
        match subjects.get(&sub.subject_id) {
            Some(rec) => {
                if needed > CredentialLevel::None
                    && rec.secret_sha256 != secret_hash(&sub.credentials.secret)
                {
                    return Err(LifecycleError::VerificationFailed(
                        "credentials do not match".into(),
                    ));
                }
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn holds_data_for(&self, subject: &SubjectId) -> Result<bool> {
        Ok(!self
            .cleanser
            .targets(&Selector::Subject {
                subject_id: subject.clone(),
            })?
            .is_empty())
    }

    /// Requests may only reach the requester's own data.
    fn check_selector(&self, subject: &SubjectId, sel: &Selector) -> Result<()> {
        if let Selector::Subject { subject_id } = sel {
            if subject_id != subject {
                return Err(LifecycleError::VerificationFailed(
                    "selector names another subject".into(),
                ));
            }
            return Ok(());
        }
        for id in self.store().primary().resolve(sel)? {
            if let Some(d) = self.store().primary().get(&id) {
                if !d.doc.subjects().contains(subject) {
                    return Err(LifecycleError::VerificationFailed(format!(
                        "selector reaches {id}, which is not the requester's data"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn submit(&self, sub: SubmitRequest) -> Result<String> {
        let known = self.check_credentials(&sub)?;
        if !known && !self.holds_data_for(&sub.subject_id)? {
            return Err(LifecycleError::VerificationFailed("no such subject".into()));
        }
        let selector = sub.selector.clone().unwrap_or(Selector::Subject {
            subject_id: sub.subject_id.clone(),
        });
        if known {
            self.check_selector(&sub.subject_id, &selector)?;
        }
        let now = self.now();
        let request_id = format!(
            "req-{:06}",
            self.next_request.fetch_add(1, Ordering::SeqCst)
        );
        let mut req = RtbfRequest {
            request_id: request_id.clone(),
            subject_id: sub.subject_id,
            subject_kind: sub.subject_kind,
            selector,
            grounds: sub.grounds,
            asserted: Vec::new(),
            received_at: now,
            acknowledged_at: None,
            extension_notice_at: None,
            state: RequestState::Submitted,
            history: vec![Transition {
                state: RequestState::Submitted,
                at: now,
            }],
            flags: Vec::new(),
            proposed: None,
            decision: None,
            receipt_id: None,
            completion_residue: None,
            responses: Vec::new(),
        };
        self.audit.append(
            now,
            &request_id,
            "state:submitted",
            vec![("state".into(), "submitted".into())],
        )?;
        if !known {
            req.set_flag(RequestFlag::NoSource);
            req.responses.push(Response::Parked {
                at: now,
                message: format!(
                    "Request {request_id} is on hold: we hold data for this identifier but cannot link it to \
                     credentials. A compliance officer will contact you through this channel."
                ),
            });
            self.audit.append(
                now,
                &request_id,
                "parked",
                vec![("flag".into(), "no-source".into())],
            )?;
            self.persist(&req)?;
            self.warnings.lock().insert(ComplianceWarning {
                kind: WarningKind::NoSource,
                request_id: request_id.clone(),
                detail: "requester could not be authenticated against any credential source".into(),
            });
            self.requests
                .write()
                .insert(request_id.clone(), Arc::new(Mutex::new(req)));
            return Err(LifecycleError::UnknownSubject { request_id });
        }
        self.transition(&mut req, RequestState::Verified, vec![])?;
        self.requests
            .write()
            .insert(request_id.clone(), Arc::new(Mutex::new(req)));
        if self.config.deadlines.auto_ack {
            self.acknowledge(&request_id)?;
        }
        Ok(request_id)
    }

    /// Idempotent: acknowledging twice returns the original acknowledgment.
    pub fn acknowledge(&self, id: &str) -> Result<Response> {
        let h = self.handle(id)?;
        let mut req = h.lock();
        if let Some(ack) = req
            .responses
            .iter()
            .find(|r| matches!(r, Response::Acknowledgment { .. }))
        {
            return Ok(ack.clone());
        }
        if req.state != RequestState::Verified {
            return Err(Self::wrong(&req, "verified"));
        }
        let now = self.now();
        let decide_by = req
            .received_at
            .plus(self.config.deadlines.policy().decide_within);
        let ack = Response::Acknowledgment {
            at: now,
            message: format!(
                "Your erasure request {} was received at {} and is being processed; a decision will be issued by {}.",
                req.request_id,
                req.received_at.millis(),
                decide_by.millis()
            ),
        };
        req.acknowledged_at = Some(now);
        req.responses.push(ack.clone());
        self.transition(&mut req, RequestState::Acknowledged, vec![])?;
        Ok(ack)
    }

    /// Records that the response period is extended for complex processing.
    pub fn send_extension_notice(&self, id: &str) -> Result<()> {
        let h = self.handle(id)?;
        let mut req = h.lock();
        if req.state.is_terminal() {
            return Err(Self::wrong(&req, "an open request"));
        }
        let now = self.now();
        req.extension_notice_at.get_or_insert(now);
        self.audit.append(now, id, "extension-notice", vec![])?;
        self.persist(&req)
    }

    pub fn assert_exemption(&self, id: &str, assertion: ExemptionAssertion) -> Result<()> {
        let h = self.handle(id)?;
        let mut req = h.lock();
        if req.state >= RequestState::Decided {
            return Err(Self::wrong(&req, "a request not yet decided"));
        }
        self.audit.append(
            self.now(),
            id,
            "exemption-asserted",
            vec![
                ("exemption".into(), assertion.exemption.article().into()),
                ("by".into(), assertion.asserted_by.clone()),
            ],
        )?;
        req.asserted.push(assertion);
        self.persist(&req)
    }

    fn purposes_of(&self, sel: &Selector) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for id in self.cleanser.targets(sel)? {
            if let Some(d) = self.store().primary().get(&id) {
                out.extend(d.doc.purposes());
            } else if let Some(e) = self.cleanser.register().get(&id) {
                out.extend(e.purposes);
            }
        }
        Ok(out)
    }

    /// Evaluates the request against the policy rules. Clear outcomes are
    /// applied directly; escalations wait for an officer.
    pub fn review(&self, id: &str) -> Result<PolicyDecision> {
        let h = self.handle(id)?;
        let decision = {
            let mut req = h.lock();
            if req.state != RequestState::Acknowledged {
                return Err(Self::wrong(&req, "acknowledged"));
            }
            let ctx = EvaluationContext {
                subject_kind: req.subject_kind,
                grounds: req.grounds.clone(),
                asserted: req.asserted.clone(),
                purposes: self.purposes_of(&req.selector)?,
            };
            let d = evaluate(&ctx, &self.config.policy, self.now());
            req.proposed = Some(d.clone());
            let kind = match d.outcome {
                Outcome::Honor => "honor",
                Outcome::Reject { .. } => "reject",
                Outcome::Escalate { .. } => "escalate",
            };
            if d.outcome.is_escalate() {
                req.set_flag(RequestFlag::Escalated);
            }
            self.transition(
                &mut req,
                RequestState::UnderReview,
                vec![("proposed".into(), kind.into())],
            )?;
            d
        };
        if !decision.outcome.is_escalate() {
            self.adjudicate(id, decision.clone(), DecidedBy::Rules)?;
        }
        Ok(decision)
    }

    pub fn adjudicate(
        &self,
        id: &str,
        mut decision: PolicyDecision,
        actor: DecidedBy,
    ) -> Result<RequestState> {
        let h = self.handle(id)?;
        let mut req = h.lock();
        if req.state != RequestState::UnderReview {
            return Err(Self::wrong(&req, "under review"));
        }
        if actor == DecidedBy::Rules && req.has_flag(RequestFlag::Escalated) {
            return Err(LifecycleError::OfficerRequired(id.to_string()));
        }
        if let DecidedBy::Officer(o) = &actor {
            if o.trim().is_empty() {
                return Err(LifecycleError::OfficerRequired(id.to_string()));
            }
        }
        if decision.outcome.is_escalate() {
            return Err(LifecycleError::InvalidDecision(vec![]));
        }
        decision.decided_by = actor;
        decision.decided_at = self.now();
        if let Some(p) = &req.proposed {
            for a in &p.considered {
                if !decision.considered.contains(a) {
                    decision.considered.push(a.clone());
                }
            }
        }
        let violations = validate_decision(&decision);
        if violations.contains(&Violation::MissingExplanation) {
            return Err(LifecycleError::MissingExplanation);
        }
        if !violations.is_empty() {
            return Err(LifecycleError::InvalidDecision(violations));
        }
        let by = match &decision.decided_by {
            DecidedBy::Rules => "rules".to_string(),
            DecidedBy::Officer(o) => format!("officer:{o}"),
        };
        req.clear_flag(RequestFlag::Escalated);
        req.decision = Some(decision.clone());
        self.transition(&mut req, RequestState::Decided, vec![("by".into(), by)])?;
        match decision.outcome {
            Outcome::Reject { explanation, cited } => {
                req.responses.push(Response::Rejected {
                    at: self.now(),
                    explanation,
                    cited,
                });
                self.transition(&mut req, RequestState::Rejected, vec![])?;
            }
            _ => {
                self.transition(&mut req, RequestState::Executing, vec![])?;
                let subject = req.subject_id.clone();
                let request_id = req.request_id.clone();
                drop(req);
                self.share_guard(&request_id, &subject, &self.config.externals)?;
                return Ok(RequestState::Executing);
            }
        }
        Ok(req.state)
    }

    /// Decides for each external recipient whether the erasure is forwarded.
    pub fn external_share_guard(
        &self,
        id: &str,
        targets: &[ExternalRecipient],
    ) -> Result<Vec<PropagationDecision>> {
        let req = self.get(id)?;
        let honored = req.decision.as_ref().is_some_and(|d| d.outcome.is_honor());
        if !honored {
            return Err(Self::wrong(&req, "an honored decision"));
        }
        self.share_guard(id, &req.subject_id, targets)
    }

    fn share_guard(
        &self,
        id: &str,
        subject: &SubjectId,
        targets: &[ExternalRecipient],
    ) -> Result<Vec<PropagationDecision>> {
        let now = self.now();
        let mut out = Vec::new();
        for t in targets {
            let action = if !t.propagate {
                PropagationAction::Disabled
            } else if !t.legal_basis {
                PropagationAction::Suppressed
            } else if let Some(endpoint) = &t.deletion_api {
                let job_id = format!("job-{:06}", self.next_job.fetch_add(1, Ordering::SeqCst));
                self.outbox.lock().push(PropagationJob {
                    job_id: job_id.clone(),
                    request_id: id.to_string(),
                    recipient: t.name.clone(),
                    endpoint: endpoint.clone(),
                    subject_id: subject.clone(),
                    created_at: now,
                });
                PropagationAction::Emitted { job_id }
            } else {
                self.warnings.lock().insert(ComplianceWarning {
                    kind: WarningKind::Propagate,
                    request_id: id.to_string(),
                    detail: format!("recipient {} offers no deletion API", t.name),
                });
                PropagationAction::NoDeletionApi
            };
            let tag = match &action {
                PropagationAction::Emitted { .. } => "emitted",
                PropagationAction::NoDeletionApi => "no-deletion-api",
                PropagationAction::Suppressed => "suppressed",
                PropagationAction::Disabled => "disabled",
            };
            self.audit.append(
                now,
                id,
                "propagation",
                vec![
                    ("recipient".into(), t.name.clone()),
                    ("action".into(), tag.into()),
                ],
            )?;
            out.push(PropagationDecision {
                recipient: t.name.clone(),
                action,
            });
        }
        Ok(out)
    }

    /// Runs cleansing for every executing request: resumes unfinished
    /// receipts, then opens one shared run for requests without one.
    pub fn run_batch(&self) -> Result<BatchReport> {
        *self.last_batch.lock() = Some(self.now());
        let executing = self.list(Some(RequestState::Executing));
        let deadline = self.config.deletion.cleanse_deadline();
        let mut report = BatchReport::default();
        let mut resumed = BTreeSet::new();
        for r in &executing {
            if let Some(rid) = &r.receipt_id {
                let receipt = self.cleanser.receipt_status(rid)?;
                if !receipt.all_done() && resumed.insert(receipt.run_id.clone()) {
                    if let Err(e) = self.cleanser.resume(rid) {
                        report.error = Some(e.to_string());
                    }
                }
            }
        }
        let fresh: Vec<&RtbfRequest> = executing
            .iter()
            .filter(|r| r.receipt_id.is_none())
            .collect();
        if fresh.is_empty() {
            return Ok(report);
        }
        let targets = fresh
            .iter()
            .map(|r| CleanseTarget {
                request_id: Some(r.request_id.clone()),
                selector: r.selector.clone(),
            })
            .collect();
        let receipts: Vec<PropagationReceipt> = match self.cleanser.cleanse_batch(targets, deadline)
        {
            Ok(r) => r,
            Err(e) => {
                report.error = Some(e.to_string());
                let r = e.receipts().to_vec();
                if r.is_empty() {
                    return Ok(report);
                }
                r
            }
        };
        for receipt in receipts {
            let Some(req_id) = &receipt.request_id else {
                continue;
            };
            let h = self.handle(req_id)?;
            let mut req = h.lock();
            req.receipt_id = Some(receipt.receipt_id.clone());
            self.audit.append(
                self.now(),
                req_id,
                "cleansing",
                vec![("receipt".into(), receipt.receipt_id.clone())],
            )?;
            self.persist(&req)?;
            report.request_ids.push(req_id.clone());
            report.receipt_ids.push(receipt.receipt_id);
        }
        Ok(report)
    }

    /// Completes a request only once its receipt is done and an independent
    /// residue scan of the selector comes back empty.
    pub fn complete(&self, id: &str) -> Result<Response> {
        let h = self.handle(id)?;
        let mut req = h.lock();
        if req.state != RequestState::Executing {
            return Err(Self::wrong(&req, "executing"));
        }
        let receipt_id = req
            .receipt_id
            .clone()
            .ok_or_else(|| LifecycleError::CleansingPending(id.to_string()))?;
        let receipt = self.cleanser.receipt_status(&receipt_id)?;
        if !receipt.all_done() {
            return Err(LifecycleError::CleansingPending(id.to_string()));
        }
        let report = self.cleanser.verify_absence(&req.selector)?;
        let now = self.now();
        if !report.is_clean() {
            let surfaces = report.surfaces().len();
            req.set_flag(RequestFlag::ResidueDetected);
            req.receipt_id = None;
            self.audit.append(
                now,
                id,
                "residue-detected",
                vec![
                    ("receipt".into(), receipt_id),
                    ("surfaces".into(), surfaces.to_string()),
                ],
            )?;
            self.persist(&req)?;
            return Err(LifecycleError::ResidueDetected {
                request_id: id.to_string(),
                surfaces,
                report,
            });
        }
        let response = Response::Completed {
            at: now,
            message: format!(
                "Your erasure request {id} is complete: {} record(s) were removed from every storage surface and \
                 an independent scan found no remaining copies.",
                receipt.doc_ids.len()
            ),
            receipt_id: receipt_id.clone(),
        };
        req.clear_flag(RequestFlag::ResidueDetected);
        req.completion_residue = Some(report.clone());
        req.responses.push(response.clone());
        self.transition(
            &mut req,
            RequestState::Completed,
            vec![
                ("receipt".into(), receipt_id),
                ("residue_clean".into(), "true".into()),
                ("markers_checked".into(), report.markers_checked.to_string()),
            ],
        )?;
        let mut ids: BTreeSet<DocId> = receipt.doc_ids.into_iter().collect();
        ids.extend(self.cleanser.targets(&req.selector)?);
        self.cleanser.purge(&ids.into_iter().collect::<Vec<_>>())?;
        Ok(response)
    }

    /// Residue report for a request: the recorded one once completed, a live
    /// scan otherwise.
    pub fn residue(&self, id: &str) -> Result<ResidueReport> {
        let req = self.get(id)?;
        if let Some(r) = req.completion_residue {
            return Ok(r);
        }
        Ok(self.cleanser.verify_absence(&req.selector)?)
    }

    pub fn receipt(&self, id: &str) -> Result<PropagationReceipt> {
        let req = self.get(id)?;
        let rid = req
            .receipt_id
            .ok_or_else(|| LifecycleError::NotFound(format!("receipt for {id}")))?;
        Ok(self.cleanser.receipt_status(&rid)?)
    }

    /// Escalated requests ordered by time to decision deadline, soonest first.
    pub fn escalated(&self) -> Vec<QueueEntry> {
        let now = self.now();
        let within = self.config.deadlines.policy().decide_within;
        let mut out: Vec<QueueEntry> = self
            .list(Some(RequestState::UnderReview))
            .into_iter()
            .filter(|r| r.is_escalated())
            .map(|r| {
                let deadline_at = r.received_at.plus(within);
                let remaining = deadline_at.millis() as i64 - now.millis() as i64;
                QueueEntry {
                    subject: pseudonym(&r.subject_id),
                    grounds: r.grounds.clone(),
                    exemptions: r.proposed.map(|p| p.considered).unwrap_or_default(),
                    received_at: r.received_at,
                    deadline_at,
                    days_remaining: remaining.div_euclid(86_400_000),
                    request_id: r.request_id,
                }
            })
            .collect();
        out.sort_by(|a, b| {
            a.deadline_at
                .cmp(&b.deadline_at)
                .then_with(|| a.request_id.cmp(&b.request_id))
        });
        out
    }

    /// Open deadline and propagation warnings.
    pub fn violations(&self) -> Vec<ComplianceWarning> {
        let now = self.now();
        let policy = self.config.deadlines.policy();
        let mut out: BTreeSet<ComplianceWarning> = self.warnings.lock().clone();
        for r in self.list(None) {
            if r.has_flag(RequestFlag::NoSource) {
                continue;
            }
            let t = ResponseTimes {
                received_at: r.received_at,
                acknowledged_at: r.acknowledged_at,
                extension_notice_at: r.extension_notice_at,
            };
            let (kind, detail) = match deadline_check(&t, &policy, now) {
                DeadlineStatus::Ok => continue,
                DeadlineStatus::LateResponse => (
                    WarningKind::LateResponse,
                    "acknowledged after the response window",
                ),
                DeadlineStatus::NoResponse => (
                    WarningKind::NoResponse,
                    "no acknowledgment within the response window",
                ),
            };
            out.insert(ComplianceWarning {
                kind,
                request_id: r.request_id,
                detail: detail.into(),
            });
        }
        out.into_iter().collect()
    }

    /// One scheduler pass: acknowledge, review, run a batch when the cadence
    /// has elapsed, and complete finished requests.
    pub fn tick(&self) -> Result<TickReport> {
        self.tick_inner(false)
    }

    /// Like [`Service::tick`] but runs the cleansing batch regardless of cadence.
    pub fn process_now(&self) -> Result<TickReport> {
        self.tick_inner(true)
    }

    fn tick_inner(&self, force_batch: bool) -> Result<TickReport> {
        let mut rep = TickReport::default();
        if self.config.deadlines.auto_ack {
            for id in self.ids_in(RequestState::Verified) {
                self.acknowledge(&id)?;
                rep.acknowledged += 1;
            }
        }
        for id in self.ids_in(RequestState::Acknowledged) {
            self.review(&id)?;
            rep.reviewed += 1;
        }
        let due = match *self.last_batch.lock() {
            None => true,
            Some(t) => self.now() >= t.plus(self.config.deletion.batch_cadence()),
        };
        if force_batch || due {
            rep.batch = Some(self.run_batch()?);
        }
        for r in self.list(Some(RequestState::Executing)) {
            if r.receipt_id.is_none() {
                continue;
            }
            match self.complete(&r.request_id) {
                Ok(_) => rep.completed += 1,
                Err(LifecycleError::ResidueDetected { .. }) => rep.residue_blocked += 1,
                Err(LifecycleError::CleansingPending(_)) => {}
                Err(e) => return Err(e),
            }
        }
        self.audit.expire(self.now())?;
        Ok(rep)
    }
}

/// Builds a decision taken by a named officer.
pub fn officer_decision(officer: &str, outcome: Outcome, at: Timestamp) -> PolicyDecision {
    PolicyDecision {
        outcome,
        decided_by: DecidedBy::Officer(officer.to_string()),
        decided_at: at,
        considered: vec![],
    }
}
