//! JSON request/response API over the lifecycle service. Transport-agnostic:
//! callers pass method, path with query and body bytes, and get back a status
//! code and a JSON body.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::policy::{Citation, Outcome};
use crate::precedent::lint;

use super::model::{RequestState, WarningKind};
use super::service::{officer_decision, LifecycleError, Service, SubmitRequest};

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Value,
}

impl ApiResponse {
    fn ok(body: impl Serialize) -> Self {
        Self::with(200, body)
    }

    fn with(status: u16, body: impl Serialize) -> Self {
        ApiResponse {
            status,
            body: serde_json::to_value(body).unwrap_or(Value::Null),
        }
    }

    fn error(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiResponse {
            status,
            body: json!({ "error": code, "message": message.into() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Honor,
    Reject,
}

/// Body of `POST /requests/{id}/decision`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionForm {
    pub outcome: DecisionKind,
    #[serde(default)]
    pub explanation: Option<String>,
    #[serde(default)]
    pub cited: Vec<Citation>,
    pub officer_id: String,
}

pub struct Api {
    service: Arc<Service>,
}

impl Api {
    pub fn new(service: Arc<Service>) -> Self {
        Api { service }
    }

    pub fn service(&self) -> &Arc<Service> {
        &self.service
    }

    pub fn handle(&self, method: &str, target: &str, body: &[u8]) -> ApiResponse {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let params: Vec<(String, String)> = form_urlencoded::parse(query.as_bytes())
            .into_owned()
            .collect();
        let param = |k: &str| params.iter().find(|(n, _)| n == k).map(|(_, v)| v.as_str());
        let segs: Vec<&str> = path
            .trim_matches('/')
            .split('/')
            .filter(|s| !s.is_empty())
            .collect();
        match (method, segs.as_slice()) {
            ("POST", ["requests"]) => self.submit(body),
            ("GET", ["requests"]) => self.list(param("state"), param("sort")),
            ("GET", ["requests", id]) => self.result(self.service.get(id)),
            ("POST", ["requests", id, "decision"]) => self.decide(id, body),
            ("GET", ["requests", id, "receipt"]) => self.result(self.service.receipt(id)),
            ("GET", ["requests", id, "residue"]) => self.result(self.service.residue(id)),
            ("GET", ["compliance", "violations"]) => ApiResponse::ok(
                self.service
                    .violations()
                    .into_iter()
                    .filter(|w| {
                        matches!(
                            w.kind,
                            WarningKind::LateResponse
                                | WarningKind::NoResponse
                                | WarningKind::Propagate
                        )
                    })
                    .collect::<Vec<_>>(),
            ),
            ("GET", ["lint"]) => ApiResponse::ok(lint(self.service.config())),
            (
                _,
                ["requests"]
                | ["requests", _]
                | ["requests", _, "decision" | "receipt" | "residue"],
            )
            | (_, ["compliance", "violations"] | ["lint"]) => ApiResponse::error(
                405,
                "method_not_allowed",
                format!("{method} not allowed on {path}"),
            ),
            _ => ApiResponse::error(404, "not_found", format!("no route for {path}")),
        }
    }

    fn submit(&self, body: &[u8]) -> ApiResponse {
        let sub: SubmitRequest = match serde_json::from_slice(body) {
            Ok(s) => s,
            Err(e) => return ApiResponse::error(400, "bad_request", e.to_string()),
        };
        match self.service.submit(sub) {
            Ok(request_id) => ApiResponse::with(201, json!({ "request_id": request_id })),
            Err(LifecycleError::UnknownSubject { request_id }) => ApiResponse::with(
                202,
                json!({ "request_id": request_id, "parked": true, "reason": "requester could not be authenticated" }),
            ),
            Err(e) => error_response(e),
        }
    }

    fn list(&self, state: Option<&str>, sort: Option<&str>) -> ApiResponse {
        if !matches!(sort, None | Some("deadline") | Some("received")) {
            return ApiResponse::error(400, "bad_request", "sort must be deadline or received");
        }
        match state {
            Some("escalated") => ApiResponse::ok(self.service.escalated()),
            None => ApiResponse::ok(self.service.list(None)),
            Some(s) => match RequestState::ALL.iter().find(|st| st.as_str() == s) {
                Some(st) => ApiResponse::ok(self.service.list(Some(*st))),
                None => ApiResponse::error(400, "bad_request", format!("unknown state {s:?}")),
            },
        }
    }

    fn decide(&self, id: &str, body: &[u8]) -> ApiResponse {
        let form: DecisionForm = match serde_json::from_slice(body) {
            Ok(f) => f,
            Err(e) => return ApiResponse::error(400, "bad_request", e.to_string()),
        };
        let outcome = match form.outcome {
            DecisionKind::Honor => Outcome::Honor,
            DecisionKind::Reject => Outcome::Reject {
                explanation: form.explanation.unwrap_or_default(),
                cited: form.cited,
            },
        };
        let decision = officer_decision(&form.officer_id, outcome, self.service.now());
        let actor = decision.decided_by.clone();
        match self.service.adjudicate(id, decision, actor) {
            Ok(state) => ApiResponse::ok(json!({ "request_id": id, "state": state })),
            Err(e) => error_response(e),
        }
    }

    fn result<T: Serialize>(&self, r: Result<T, LifecycleError>) -> ApiResponse {
        match r {
            Ok(v) => ApiResponse::ok(v),
            Err(e) => error_response(e),
        }
    }
}

fn error_response(e: LifecycleError) -> ApiResponse {
    let msg = e.to_string();
    match e {
        LifecycleError::VerificationFailed(_) => {
            ApiResponse::error(403, "verification_failed", msg)
        }
        LifecycleError::NotFound(_) => ApiResponse::error(404, "not_found", msg),
        LifecycleError::WrongState { .. } => ApiResponse::error(409, "wrong_state", msg),
        LifecycleError::MissingExplanation => ApiResponse::error(422, "missing_explanation", msg),
        LifecycleError::InvalidDecision(v) => ApiResponse::with(
            422,
            json!({ "error": "invalid_decision", "message": msg, "violations": v }),
        ),
        LifecycleError::OfficerRequired(_) => ApiResponse::error(422, "officer_required", msg),
        LifecycleError::ResidueDetected { report, .. } => ApiResponse::with(
            409,
            json!({ "error": "residue_detected", "message": msg, "residue": report }),
        ),
        LifecycleError::CleansingPending(_) => ApiResponse::error(409, "cleansing_pending", msg),
        LifecycleError::UnknownSubject { .. } => ApiResponse::error(202, "parked", msg),
        _ => ApiResponse::error(500, "internal", msg),
    }
}
