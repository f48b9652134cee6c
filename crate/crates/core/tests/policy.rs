use std::collections::BTreeSet;

use forget_core::clock::Timestamp;
use forget_core::policy::*;
use proptest::prelude::*;

const NOW: Timestamp = Timestamp(86_400_000);

fn fixture_rules() -> PolicyRules {
    PolicyRules::parse(include_str!("../fixtures/policy/retention.toml")).unwrap()
}

fn purposes(ps: &[&str]) -> BTreeSet<String> {
    ps.iter().map(|p| p.to_string()).collect()
}

fn assertion(e: Exemption, c: Certainty) -> ExemptionAssertion {
    ExemptionAssertion {
        exemption: e,
        certainty: c,
        asserted_by: "dpo".into(),
        reason: format!("{e:?} applies"),
    }
}

/// Expected outcome kind, computed directly from the inputs.
#[derive(Debug, PartialEq, Eq)]
enum Kind {
    Honor,
    Reject,
    Escalate,
}

fn oracle(kind: SubjectKind, grounds: &[GroundClaim], ex: &[ExemptionAssertion]) -> Kind {
    if kind == SubjectKind::Organization {
        return Kind::Reject;
    }
    if !grounds.iter().any(|g| g.established) {
        return Kind::Reject;
    }
    if ex.iter().any(|a| a.certainty == Certainty::Clear) {
        return Kind::Reject;
    }
    if ex.is_empty() {
        Kind::Honor
    } else {
        Kind::Escalate
    }
}

fn kind_of(o: &Outcome) -> Kind {
    match o {
        Outcome::Honor => Kind::Honor,
        Outcome::Reject { .. } => Kind::Reject,
        Outcome::Escalate { .. } => Kind::Escalate,
    }
}

fn grounds_from_mask(mask: u32) -> Vec<GroundClaim> {
    Ground::ALL
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(i, g)| {
            if i % 2 == 0 {
                GroundClaim::holds(*g)
            } else {
                GroundClaim::unproven(*g)
            }
        })
        .collect()
}

fn exemptions_from_code(mut code: u32) -> Vec<ExemptionAssertion> {
    let mut out = Vec::new();
    for e in Exemption::ALL {
        match code % 3 {
            1 => out.push(assertion(e, Certainty::Clear)),
            2 => out.push(assertion(e, Certainty::Ambiguous)),
            _ => {}
        }
        code /= 3;
    }
    out
}

#[test]
fn decision_table_is_total_and_matches_oracle() {
    let rules = PolicyRules::builtin();
    let mut seen = 0;
    for subject_kind in [SubjectKind::NaturalPerson, SubjectKind::Organization] {
        for mask in 0..64u32 {
            for code in 0..243u32 {
                let ctx = EvaluationContext {
                    subject_kind,
                    grounds: grounds_from_mask(mask),
                    asserted: exemptions_from_code(code),
                    purposes: purposes(&["account"]),
                };
                let d = evaluate(&ctx, &rules, NOW);
                assert_eq!(
                    kind_of(&d.outcome),
                    oracle(subject_kind, &ctx.grounds, &ctx.asserted),
                    "{ctx:?}"
                );
                assert!(validate_decision(&d).is_empty(), "{d:?}");
                assert_eq!(d.decided_by, DecidedBy::Rules);
                seen += 1;
            }
        }
    }
    assert_eq!(seen, 2 * 64 * 243);
}

#[test]
fn every_rejection_cites_and_explains() {
    let rules = fixture_rules();
    for mask in 0..64u32 {
        for code in 0..243u32 {
            let ctx = EvaluationContext {
                grounds: grounds_from_mask(mask),
                asserted: exemptions_from_code(code),
                ..Default::default()
            };
            if let Outcome::Reject { explanation, cited } = evaluate(&ctx, &rules, NOW).outcome {
                assert!(!explanation.trim().is_empty());
                assert!(!cited.is_empty());
                for a in ctx
                    .asserted
                    .iter()
                    .filter(|a| a.certainty == Certainty::Clear)
                {
                    if ctx.grounds.iter().any(|g| g.established) {
                        assert!(cited.contains(&Citation::Exemption(a.exemption)));
                        assert!(
                            explanation.contains(&a.reason),
                            "explanation must carry the reason"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn betting_records_rejection_explains_five_year_retention() {
    let ctx = EvaluationContext {
        grounds: vec![GroundClaim::holds(Ground::ConsentWithdrawn)],
        purposes: purposes(&["betting"]),
        ..Default::default()
    };
    let d = evaluate(&ctx, &fixture_rules(), NOW);
    match &d.outcome {
        Outcome::Reject { explanation, cited } => {
            assert_eq!(
                cited,
                &vec![Citation::Exemption(Exemption::LegalObligationOrPublicTask)]
            );
            assert!(explanation.contains("five years"));
            assert!(explanation.contains("1826 days"));
            assert!(explanation.contains("Art. 17(3)(b)"));
        }
        other => panic!("expected rejection, got {other:?}"),
    }
    assert_eq!(
        d.considered[0].asserted_by,
        "retention-rule:betting-records"
    );
}

#[test]
fn audit_log_is_never_erasable() {
    for rules in [
        PolicyRules::builtin(),
        fixture_rules(),
        PolicyRules::parse("").unwrap(),
    ] {
        let ctx = EvaluationContext {
            grounds: Ground::ALL.iter().map(|g| GroundClaim::holds(*g)).collect(),
            purposes: purposes(&[AUDIT_LOG_PURPOSE]),
            ..Default::default()
        };
        let d = evaluate(&ctx, &rules, NOW);
        assert!(d.outcome.is_reject());
        if let Outcome::Reject { explanation, .. } = d.outcome {
            assert!(explanation.contains("log of erasure requests"));
        }
    }
}

#[test]
fn payment_default_rejection_cites_legal_claims() {
    let ctx = EvaluationContext {
        grounds: vec![GroundClaim::holds(Ground::Objection)],
        purposes: purposes(&["debt-collection", "account"]),
        ..Default::default()
    };
    match evaluate(&ctx, &fixture_rules(), NOW).outcome {
        Outcome::Reject { explanation, cited } => {
            assert_eq!(cited, vec![Citation::Exemption(Exemption::LegalClaims)]);
            assert!(explanation.contains("debt has been paid off"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn organization_requester_is_rejected_with_reason() {
    let ctx = EvaluationContext {
        subject_kind: SubjectKind::Organization,
        grounds: vec![GroundClaim::holds(Ground::ConsentWithdrawn)],
        ..Default::default()
    };
    match evaluate(&ctx, &PolicyRules::builtin(), NOW).outcome {
        Outcome::Reject { explanation, cited } => {
            assert_eq!(cited, vec![Citation::NotANaturalPerson]);
            assert!(explanation.contains("natural persons"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn ambiguous_press_exemption_escalates() {
    let ctx = EvaluationContext {
        grounds: vec![GroundClaim::holds(Ground::Objection)],
        purposes: purposes(&["press-archive"]),
        ..Default::default()
    };
    match evaluate(&ctx, &fixture_rules(), NOW).outcome {
        Outcome::Escalate { reason } => assert!(reason.contains("Art. 17(3)(a)")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unproven_grounds_are_each_cited() {
    let ctx = EvaluationContext {
        grounds: vec![
            GroundClaim::unproven(Ground::PurposeExpired),
            GroundClaim::unproven(Ground::ChildConsent),
        ],
        ..Default::default()
    };
    match evaluate(&ctx, &PolicyRules::builtin(), NOW).outcome {
        Outcome::Reject { cited, .. } => assert_eq!(
            cited,
            vec![
                Citation::GroundNotMet(Ground::PurposeExpired),
                Citation::GroundNotMet(Ground::ChildConsent)
            ]
        ),
        other => panic!("{other:?}"),
    }
    let none = evaluate(&EvaluationContext::default(), &PolicyRules::builtin(), NOW);
    assert!(
        matches!(none.outcome, Outcome::Reject { ref cited, .. } if cited == &vec![Citation::NoGroundClaimed])
    );
}

#[test]
fn validator_flags_bad_decisions() {
    let bare = PolicyDecision {
        outcome: Outcome::Reject {
            explanation: " ".into(),
            cited: vec![],
        },
        decided_by: DecidedBy::Officer("o1".into()),
        decided_at: NOW,
        considered: vec![],
    };
    assert_eq!(
        validate_decision(&bare),
        vec![Violation::MissingExplanation, Violation::MissingCitation]
    );
    let honor = PolicyDecision {
        outcome: Outcome::Honor,
        decided_by: DecidedBy::Officer("o1".into()),
        decided_at: NOW,
        considered: vec![assertion(Exemption::PublicHealth, Certainty::Clear)],
    };
    assert_eq!(
        validate_decision(&honor),
        vec![Violation::HonorDespiteClearExemption {
            exemption: Exemption::PublicHealth
        }]
    );
}

#[test]
fn malformed_rules_are_unparseable() {
    assert!(matches!(
        PolicyRules::parse("[[rule]]\nid = 3"),
        Err(RulesError::Unparseable(_))
    ));
}

#[test]
fn decision_json_shape() {
    let ctx = EvaluationContext {
        grounds: vec![GroundClaim::holds(Ground::ConsentWithdrawn)],
        purposes: purposes(&["betting"]),
        ..Default::default()
    };
    let v = serde_json::to_value(evaluate(&ctx, &fixture_rules(), NOW)).unwrap();
    assert_eq!(v["outcome"], "reject");
    assert_eq!(v["cited"][0]["kind"], "exemption");
    assert_eq!(v["cited"][0]["value"], "legal_obligation_or_public_task");
    assert_eq!(v["decided_by"]["by"], "rules");
}

fn arb_ctx() -> impl Strategy<Value = EvaluationContext> {
    (0..64u32, 0..243u32, any::<bool>()).prop_map(|(m, c, org)| EvaluationContext {
        subject_kind: if org {
            SubjectKind::Organization
        } else {
            SubjectKind::NaturalPerson
        },
        grounds: grounds_from_mask(m),
        asserted: exemptions_from_code(c),
        purposes: BTreeSet::new(),
    })
}

proptest! {
    #[test]
    fn adding_a_clear_exemption_never_turns_reject_into_honor(ctx in arb_ctx(), e in 0..5usize) {
        let rules = PolicyRules::builtin();
        let before = evaluate(&ctx, &rules, NOW).outcome;
        let mut more = ctx.clone();
        more.asserted.push(assertion(Exemption::ALL[e], Certainty::Clear));
        let after = evaluate(&more, &rules, NOW).outcome;
        prop_assert!(!after.is_honor());
        if before.is_reject() { prop_assert!(after.is_reject()); }
    }

    #[test]
    fn establishing_a_ground_never_turns_honor_into_reject(ctx in arb_ctx(), g in 0..6usize) {
        let rules = PolicyRules::builtin();
        let before = evaluate(&ctx, &rules, NOW).outcome;
        let mut more = ctx.clone();
        more.grounds.push(GroundClaim::holds(Ground::ALL[g]));
        let after = evaluate(&more, &rules, NOW).outcome;
        if before.is_honor() { prop_assert!(after.is_honor()); }
    }

    #[test]
    fn ambiguity_never_resolves_to_honor(ctx in arb_ctx(), e in 0..5usize) {
        let mut ctx = ctx;
        ctx.asserted.push(assertion(Exemption::ALL[e], Certainty::Ambiguous));
        let out = evaluate(&ctx, &PolicyRules::builtin(), NOW).outcome;
        prop_assert!(!out.is_honor());
    }

    #[test]
    fn deadline_is_monotone_in_ack_time(recv in 0..100u64, a in 0..100u64, b in 0..100u64) {
        let p = DeadlinePolicy::default();
        let (lo, hi) = (a.min(b), a.max(b));
        let at = |d| Timestamp::from_days(d);
        let t = |ack| ResponseTimes { received_at: at(recv), acknowledged_at: Some(at(recv + ack)), extension_notice_at: None };
        let s_lo = deadline_check(&t(lo), &p, at(300));
        let s_hi = deadline_check(&t(hi), &p, at(300));
        if s_lo == DeadlineStatus::LateResponse { prop_assert_eq!(s_hi, DeadlineStatus::LateResponse); }
        prop_assert_eq!(s_lo == DeadlineStatus::Ok, lo <= 30);
    }
}
