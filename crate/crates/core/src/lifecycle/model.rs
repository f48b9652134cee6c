//! Requests, responses and compliance warnings.

use serde::{Deserialize, Serialize};

use crate::cleanse::ResidueReport;
use crate::clock::Timestamp;
use crate::config::CredentialLevel;
use crate::engine::document::SubjectId;
use crate::engine::Selector;
use crate::policy::{Citation, ExemptionAssertion, GroundClaim, PolicyDecision, SubjectKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestState {
    Submitted,
    Verified,
    Acknowledged,
    UnderReview,
    Decided,
    Executing,
    Completed,
    Rejected,
}

impl RequestState {
    pub const ALL: [RequestState; 8] = [
        RequestState::Submitted,
        RequestState::Verified,
        RequestState::Acknowledged,
        RequestState::UnderReview,
        RequestState::Decided,
        RequestState::Executing,
        RequestState::Completed,
        RequestState::Rejected,
    ];

    /// The only permitted transitions.
    pub fn can_move_to(self, next: RequestState) -> bool {
        use RequestState::*;
        matches!(
            (self, next),
            (Submitted, Verified)
                | (Verified, Acknowledged)
                | (Acknowledged, UnderReview)
                | (UnderReview, Decided)
                | (Decided, Executing)
                | (Decided, Rejected)
                | (Executing, Completed)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, RequestState::Completed | RequestState::Rejected)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RequestState::Submitted => "submitted",
            RequestState::Verified => "verified",
            RequestState::Acknowledged => "acknowledged",
            RequestState::UnderReview => "under_review",
            RequestState::Decided => "decided",
            RequestState::Executing => "executing",
            RequestState::Completed => "completed",
            RequestState::Rejected => "rejected",
        }
    }
}

/// Proof of identity presented with a request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credentials {
    pub level: CredentialLevel,
    #[serde(default)]
    pub secret: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequestFlag {
    /// Data exists for the subject but no credential mapping does, so the
    /// requester cannot be authenticated. The request is parked, not dropped.
    NoSource,
    /// Policy evaluation escalated the request to a human officer.
    Escalated,
    /// Completion was attempted and residue was found.
    ResidueDetected,
}

/// Messages delivered to the data subject. There is deliberately no variant
/// that refers the subject to another controller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Response {
    Acknowledgment {
        at: Timestamp,
        message: String,
    },
    Parked {
        at: Timestamp,
        message: String,
    },
    Rejected {
        at: Timestamp,
        explanation: String,
        cited: Vec<Citation>,
    },
    Completed {
        at: Timestamp,
        message: String,
        receipt_id: String,
    },
}

impl Response {
    pub fn at(&self) -> Timestamp {
        match self {
            Response::Acknowledgment { at, .. }
            | Response::Parked { at, .. }
            | Response::Rejected { at, .. }
            | Response::Completed { at, .. } => *at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub state: RequestState,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RtbfRequest {
    pub request_id: String,
    pub subject_id: SubjectId,
    pub subject_kind: SubjectKind,
    pub selector: Selector,
    pub grounds: Vec<GroundClaim>,
    /// Exemptions asserted against this request by staff.
    #[serde(default)]
    pub asserted: Vec<ExemptionAssertion>,
    pub received_at: Timestamp,
    pub acknowledged_at: Option<Timestamp>,
    pub extension_notice_at: Option<Timestamp>,
    pub state: RequestState,
    pub history: Vec<Transition>,
    #[serde(default)]
    pub flags: Vec<RequestFlag>,
    /// Outcome proposed by rule evaluation.
    pub proposed: Option<PolicyDecision>,
    pub decision: Option<PolicyDecision>,
    pub receipt_id: Option<String>,
    /// Residue scan recorded when the request was completed.
    pub completion_residue: Option<ResidueReport>,
    pub responses: Vec<Response>,
}

impl RtbfRequest {
    pub fn has_flag(&self, f: RequestFlag) -> bool {
        self.flags.contains(&f)
    }

    pub fn set_flag(&mut self, f: RequestFlag) {
        if !self.has_flag(f) {
            self.flags.push(f);
            self.flags.sort();
        }
    }

    pub fn clear_flag(&mut self, f: RequestFlag) {
        self.flags.retain(|x| *x != f);
    }

    pub fn is_escalated(&self) -> bool {
        self.state == RequestState::UnderReview && self.has_flag(RequestFlag::Escalated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarningKind {
    LateResponse,
    NoResponse,
    Propagate,
    NoSource,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComplianceWarning {
    pub kind: WarningKind,
    pub request_id: String,
    pub detail: String,
}

/// What happened to one external recipient when an erasure was honored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum PropagationAction {
    /// Job handed to the outbound transport.
    Emitted { job_id: String },
    /// Recipient offers no deletion API; flagged for manual follow-up.
    NoDeletionApi,
    /// No legal basis to forward the erasure; nothing was sent.
    Suppressed,
    /// Recipient configured not to receive erasure requests.
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationDecision {
    pub recipient: String,
    #[serde(flatten)]
    pub action: PropagationAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationJob {
    pub job_id: String,
    pub request_id: String,
    pub recipient: String,
    pub endpoint: String,
    pub subject_id: SubjectId,
    pub created_at: Timestamp,
}
