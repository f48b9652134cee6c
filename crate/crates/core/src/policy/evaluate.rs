//! Decision table.
//!
//! | subject      | valid ground | exemptions          | outcome                     |
//! |--------------|--------------|---------------------|-----------------------------|
//! | organization | any          | any                 | Reject (not a person)       |
//! | person       | none         | any                 | Reject (ground not met)     |
//! | person       | >= 1         | >= 1 clear          | Reject citing clear ones    |
//! | person       | >= 1         | only ambiguous      | Escalate                    |
//! | person       | >= 1         | none                | Honor                       |

use std::collections::BTreeSet;

use crate::clock::Timestamp;

use super::model::{
    Certainty, Citation, DecidedBy, ExemptionAssertion, GroundClaim, Outcome, PolicyDecision,
    SubjectKind, Violation,
};
use super::rules::PolicyRules;

#[derive(Debug, Clone, Default)]
pub struct EvaluationContext {
    pub subject_kind: SubjectKind,
    pub grounds: Vec<GroundClaim>,
    pub asserted: Vec<ExemptionAssertion>,
    /// Purposes of the targeted data, matched against retention rules.
    pub purposes: BTreeSet<String>,
}

pub fn evaluate(ctx: &EvaluationContext, rules: &PolicyRules, now: Timestamp) -> PolicyDecision {
    let mut considered = ctx.asserted.clone();
    considered.extend(rules.assertions_for(&ctx.purposes));
    let outcome = decide(ctx, &considered);
    PolicyDecision {
        outcome,
        decided_by: DecidedBy::Rules,
        decided_at: now,
        considered,
    }
}

fn decide(ctx: &EvaluationContext, considered: &[ExemptionAssertion]) -> Outcome {
    if ctx.subject_kind == SubjectKind::Organization {
        return Outcome::Reject {
            explanation: "The right to erasure applies to natural persons only; the requester is an organization."
                .into(),
            cited: vec![Citation::NotANaturalPerson],
        };
    }
    let valid: Vec<&GroundClaim> = ctx.grounds.iter().filter(|g| g.established).collect();
    if valid.is_empty() {
        if ctx.grounds.is_empty() {
            return Outcome::Reject {
                explanation: "No ground for erasure under Art. 17(1) was claimed.".into(),
                cited: vec![Citation::NoGroundClaimed],
            };
        }
        let lines: Vec<String> = ctx
            .grounds
            .iter()
            .map(|g| {
                format!(
                    "{} ({}) could not be established",
                    g.ground.article(),
                    g.ground.describe()
                )
            })
            .collect();
        return Outcome::Reject {
            explanation: format!("No claimed ground holds: {}.", lines.join("; ")),
            cited: ctx
                .grounds
                .iter()
                .map(|g| Citation::GroundNotMet(g.ground))
                .collect(),
        };
    }
    let clear: Vec<&ExemptionAssertion> = considered
        .iter()
        .filter(|a| a.certainty == Certainty::Clear)
        .collect();
    if !clear.is_empty() {
        let mut cited: Vec<Citation> = clear
            .iter()
            .map(|a| Citation::Exemption(a.exemption))
            .collect();
        cited.sort();
        cited.dedup();
        let lines: Vec<String> = clear
            .iter()
            .map(|a| {
                format!(
                    "{} ({}): {}",
                    a.exemption.article(),
                    a.exemption.describe(),
                    a.reason
                )
            })
            .collect();
        return Outcome::Reject {
            explanation: format!("Erasure refused. {}", lines.join(" ")),
            cited,
        };
    }
    if !considered.is_empty() {
        let names: Vec<&str> = considered.iter().map(|a| a.exemption.article()).collect();
        return Outcome::Escalate {
            reason: format!(
                "Ground holds but exemption applicability is unclear: {}",
                names.join(", ")
            ),
        };
    }
    Outcome::Honor
}

pub fn validate_decision(d: &PolicyDecision) -> Vec<Violation> {
    let mut v = Vec::new();
    match &d.outcome {
        Outcome::Reject { explanation, cited } => {
            if explanation.trim().is_empty() {
                v.push(Violation::MissingExplanation);
            }
            if cited.is_empty() {
                v.push(Violation::MissingCitation);
            }
        }
        Outcome::Honor => {
            for a in d
                .considered
                .iter()
                .filter(|a| a.certainty == Certainty::Clear)
            {
                v.push(Violation::HonorDespiteClearExemption {
                    exemption: a.exemption,
                });
            }
        }
        Outcome::Escalate { .. } => {}
    }
    v
}
