mod common;

use std::sync::atomic::Ordering;
use std::sync::Arc;

use common::*;
use forget_core::clock::{days, SimClock};
use forget_core::config::{CredentialLevel, SystemConfig};
use forget_core::engine::document::{DocumentDraft, PiiTag, SubjectId};
use forget_core::lifecycle::{Api, ApiResponse, RequestState, Service};
use serde_json::{json, Value};
use tempfile::TempDir;

const CONFIG: &str = r#"
[[policy.assertion]]
purposes = ["press-archive"]
exemption = "freedom_of_expression"
certainty = "ambiguous"
asserted_by = "editorial-desk"
reason = "Article may be of public interest."
"#;

struct Fx {
    dir: TempDir,
    clock: SimClock,
    api: Api,
}

impl Fx {
    fn new(extra: &str) -> Fx {
        let dir = tempfile::tempdir().unwrap();
        let (clock, shared) = sim();
        let cfg = SystemConfig::parse(&format!("{extra}\n{CONFIG}")).unwrap();
        let svc = Arc::new(Service::open(dir.path(), cfg, shared).unwrap());
        Fx {
            dir,
            clock,
            api: Api::new(svc),
        }
    }

    fn call(&self, method: &str, path: &str, body: Value) -> ApiResponse {
        let bytes = if body.is_null() {
            Vec::new()
        } else {
            serde_json::to_vec(&body).unwrap()
        };
        self.api.handle(method, path, &bytes)
    }

    fn get(&self, path: &str) -> ApiResponse {
        self.call("GET", path, Value::Null)
    }

    fn enroll(&self, subject: &str, purpose: &str, seed: u64) -> String {
        let svc = self.api.service();
        svc.register_subject(
            SubjectId::new(subject),
            CredentialLevel::Email,
            &format!("pw-{subject}"),
        )
        .unwrap();
        let s = sentinel(&mut rng(seed));
        svc.ingest(
            DocumentDraft::new()
                .field("body", format!("note {s}"))
                .personal(
                    "email",
                    format!("{subject}@example.org"),
                    PiiTag::new(subject, purpose),
                ),
        )
        .unwrap();
        s
    }

    fn submit(&self, subject: &str, ground: &str) -> ApiResponse {
        self.call(
            "POST",
            "/requests",
            json!({
                "subject_id": subject,
                "grounds": [{"ground": ground, "established": true}],
                "credentials": {"level": "email", "secret": format!("pw-{subject}")},
            }),
        )
    }
}

fn id_of(r: &ApiResponse) -> String {
    r.body["request_id"].as_str().unwrap().to_string()
}

#[test]
fn submit_then_view_request() {
    let f = Fx::new("");
    f.enroll("ana", "support", 1);
    let r = f.submit("ana", "consent_withdrawn");
    assert_eq!(r.status, 201, "{:?}", r.body);
    let id = id_of(&r);
    let v = f.get(&format!("/requests/{id}"));
    assert_eq!(v.status, 200);
    assert_eq!(v.body["request_id"], id.as_str());
    assert_eq!(v.body["state"], "acknowledged");
    assert_eq!(v.body["responses"][0]["kind"], "acknowledgment");
}

#[test]
fn bad_input_and_unknown_routes() {
    let f = Fx::new("");
    assert_eq!(f.api.handle("POST", "/requests", b"{not json").status, 400);
    assert_eq!(f.get("/requests/req-999999").status, 404);
    assert_eq!(f.get("/nowhere").status, 404);
    assert_eq!(f.call("DELETE", "/requests", Value::Null).status, 405);
    assert_eq!(f.get("/requests?state=sideways").status, 400);
    assert_eq!(f.get("/requests?sort=size").status, 400);
}

#[test]
fn wrong_secret_is_forbidden_and_unknown_subject_is_parked() {
    let f = Fx::new("");
    f.enroll("ben", "support", 2);
    let r = f.call(
        "POST",
        "/requests",
        json!({"subject_id": "ben", "credentials": {"level": "email", "secret": "nope"}}),
    );
    assert_eq!(r.status, 403);
    assert_eq!(r.body["error"], "verification_failed");

    let svc = f.api.service();
    svc.ingest(DocumentDraft::new().personal("phone", "+45 1234", PiiTag::new("ghost", "legacy")))
        .unwrap();
    let r = f.call(
        "POST",
        "/requests",
        json!({"subject_id": "ghost", "credentials": {"level": "email", "secret": "x"}}),
    );
    assert_eq!(r.status, 202);
    assert_eq!(r.body["parked"], true);
    let v = f.get(&format!("/requests/{}", id_of(&r)));
    assert_eq!(v.body["state"], "submitted");
    assert!(v.body["flags"]
        .as_array()
        .unwrap()
        .contains(&json!("no-source")));
}

#[test]
fn escalated_queue_sorted_by_deadline() {
    let f = Fx::new("");
    let mut ids = Vec::new();
    for (i, s) in ["p1", "p2", "p3"].iter().enumerate() {
        f.enroll(s, "press-archive", 10 + i as u64);
        ids.push(id_of(&f.submit(s, "objection")));
        f.clock.advance(days(2));
    }
    f.api.service().process_now().unwrap();
    let q = f.get("/requests?state=escalated&sort=deadline");
    assert_eq!(q.status, 200);
    let got: Vec<String> = q
        .body
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["request_id"].as_str().unwrap().into())
        .collect();
    assert_eq!(got, ids);
    let service_order: Vec<String> = f
        .api
        .service()
        .escalated()
        .into_iter()
        .map(|e| e.request_id)
        .collect();
    assert_eq!(got, service_order);
    for e in q.body.as_array().unwrap() {
        assert!(e["subject"].as_str().unwrap().starts_with("subj-"));
        assert!(!e.to_string().contains("@example.org"));
    }
    let under = f.get("/requests?state=under_review");
    assert_eq!(under.body.as_array().unwrap().len(), 3);
}

#[test]
fn officer_decision_flow() {
    let f = Fx::new("");
    f.enroll("cy", "press-archive", 20);
    let id = id_of(&f.submit("cy", "objection"));
    f.api.service().process_now().unwrap();
    let path = format!("/requests/{id}/decision");

    let r = f.call(
        "POST",
        &path,
        json!({"outcome": "reject", "officer_id": "o-1"}),
    );
    assert_eq!(r.status, 422);
    assert_eq!(r.body["error"], "missing_explanation");
    let r = f.call(
        "POST",
        &path,
        json!({"outcome": "reject", "explanation": "   ", "officer_id": "o-1"}),
    );
    assert_eq!(r.status, 422);
    let r = f.call("POST", &path, json!({"outcome": "honor", "officer_id": ""}));
    assert_eq!(r.body["error"], "officer_required");
    assert_eq!(
        f.get(&format!("/requests/{id}")).body["state"],
        "under_review"
    );

    let text = "Archive retained while the public-interest review is open.";
    let r = f.call(
        "POST",
        &path,
        json!({
            "outcome": "reject",
            "explanation": text,
            "cited": [{"kind": "exemption", "value": "freedom_of_expression"}],
            "officer_id": "o-1",
        }),
    );
    assert_eq!(r.status, 200, "{:?}", r.body);
    assert_eq!(
        r.body["state"],
        serde_json::to_value(RequestState::Rejected).unwrap()
    );
    let v = f.get(&format!("/requests/{id}"));
    assert_eq!(
        v.body["responses"].as_array().unwrap().last().unwrap()["explanation"],
        text
    );
    assert_eq!(
        f.call(
            "POST",
            &path,
            json!({"outcome": "honor", "officer_id": "o-2"})
        )
        .status,
        409
    );
    assert!(f
        .get("/requests?state=escalated")
        .body
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn receipt_and_residue_json() {
    let f = Fx::new("");
    let s = f.enroll("di", "support", 30);
    let id = id_of(&f.submit("di", "consent_withdrawn"));
    assert_eq!(f.get(&format!("/requests/{id}/receipt")).status, 404);
    let live = f.get(&format!("/requests/{id}/residue"));
    assert_eq!(live.status, 200);
    assert!(live.body.to_string().contains("matches"));
    f.api.service().process_now().unwrap();
    assert_eq!(f.get(&format!("/requests/{id}")).body["state"], "completed");

    let rc = f.get(&format!("/requests/{id}/receipt"));
    assert_eq!(rc.status, 200);
    let steps = rc.body["steps"].as_array().expect("steps array");
    assert!(!steps.is_empty());
    assert!(rc.body.to_string().contains("done"));
    let res = f.get(&format!("/requests/{id}/residue"));
    assert_eq!(res.status, 200);
    assert!(res.body["matches"].as_array().unwrap().is_empty());
    assert_eq!(grep_dir(&f.dir.path().join("data"), &s), 0);
}

#[test]
fn residue_blocked_completion_is_visible() {
    let f = Fx::new("");
    f.enroll("ed", "support", 40);
    let svc = f.api.service();
    svc.store().snapshot_create().unwrap();
    svc.store()
        .primary()
        .faults
        .leave_stray_snapshot
        .store(true, Ordering::SeqCst);
    let id = id_of(&f.submit("ed", "consent_withdrawn"));
    svc.process_now().unwrap();
    let v = f.get(&format!("/requests/{id}"));
    assert_eq!(v.body["state"], "executing");
    assert!(v.body["flags"]
        .as_array()
        .unwrap()
        .contains(&json!("residue-detected")));
    assert!(!f.get(&format!("/requests/{id}/residue")).body["matches"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn compliance_violations_list_overdue_acknowledgments() {
    let f = Fx::new("[deadlines]\nauto_ack = false");
    f.enroll("fi", "support", 50);
    let id = id_of(&f.submit("fi", "consent_withdrawn"));
    assert!(f
        .get("/compliance/violations")
        .body
        .as_array()
        .unwrap()
        .is_empty());
    f.clock.advance(days(31));
    let v = f.get("/compliance/violations");
    let arr = v.body.as_array().unwrap();
    assert_eq!(arr.len(), 1);
    assert_eq!(arr[0]["kind"], "no-response");
    assert_eq!(arr[0]["request_id"], id.as_str());
}

#[test]
fn lint_endpoint_reports_service_config() {
    let clean = Fx::new("");
    let r = clean.get("/lint");
    assert_eq!(r.status, 200);
    assert!(r.body.as_array().unwrap().is_empty());
    let dirty =
        Fx::new("[schema]\nunique_key = \"email\"\n[deletion]\nmode = \"anonymize-in-place\"");
    let ids: Vec<u64> = dirty
        .get("/lint")
        .body
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![1, 2]);
}
