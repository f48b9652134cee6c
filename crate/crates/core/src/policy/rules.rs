//! Retention rules and standing exemption assertions, loaded from TOML.
//!
//! ```toml
//! [[rule]]
//! id = "betting-5y"
//! purposes = ["betting-transaction"]
//! exemption = "legal_obligation_or_public_task"
//! retain_days = 1826
//! explanation = "Gambling legislation requires betting records to be kept for five years."
//!
//! [[assertion]]
//! purposes = ["press-archive"]
//! exemption = "freedom_of_expression"
//! certainty = "ambiguous"
//! asserted_by = "legal@controller"
//! reason = "Article may be of public interest."
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Certainty, Exemption, ExemptionAssertion};

pub const AUDIT_LOG_PURPOSE: &str = "rtbf-audit";

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("policy config unparseable: {0}")]
    Unparseable(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetentionRule {
    pub id: String,
    pub purposes: Vec<String>,
    #[serde(default = "legal_obligation")]
    pub exemption: Exemption,
    #[serde(default)]
    pub retain_days: Option<u64>,
    pub explanation: String,
}

fn legal_obligation() -> Exemption {
    Exemption::LegalObligationOrPublicTask
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandingAssertion {
    pub purposes: Vec<String>,
    pub exemption: Exemption,
    pub certainty: Certainty,
    pub asserted_by: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRules {
    #[serde(default, rename = "rule")]
    pub rules: Vec<RetentionRule>,
    #[serde(default, rename = "assertion")]
    pub assertions: Vec<StandingAssertion>,
}

impl PolicyRules {
    pub fn parse(text: &str) -> Result<Self, RulesError> {
        let mut r: PolicyRules = toml::from_str(text)?;
        r.ensure_builtin();
        Ok(r)
    }

    /// Only the built-in rule protecting the erasure-request audit log.
    pub fn builtin() -> Self {
        let mut r = PolicyRules::default();
        r.ensure_builtin();
        r
    }

    pub fn ensure_builtin(&mut self) {
        if !self.rules.iter().any(|r| r.id == "rtbf-audit-log") {
            self.rules.push(RetentionRule {
                id: "rtbf-audit-log".into(),
                purposes: vec![AUDIT_LOG_PURPOSE.into()],
                exemption: Exemption::LegalObligationOrPublicTask,
                retain_days: None,
                explanation: "The log of erasure requests is kept to demonstrate compliance; \
                              erasure is not supported on that log itself."
                    .into(),
            });
        }
    }

    /// Assertions produced by rules and standing assertions matching the purposes.
    pub fn assertions_for(&self, purposes: &BTreeSet<String>) -> Vec<ExemptionAssertion> {
        let hit = |ps: &[String]| ps.iter().any(|p| purposes.contains(p));
        let mut out: Vec<ExemptionAssertion> = self
            .rules
            .iter()
            .filter(|r| hit(&r.purposes))
            .map(|r| ExemptionAssertion {
                exemption: r.exemption,
                certainty: Certainty::Clear,
                asserted_by: format!("retention-rule:{}", r.id),
                reason: match r.retain_days {
                    Some(d) => format!("{} (retention period {d} days)", r.explanation),
                    None => r.explanation.clone(),
                },
            })
            .collect();
        out.extend(
            self.assertions
                .iter()
                .filter(|a| hit(&a.purposes))
                .map(|a| ExemptionAssertion {
                    exemption: a.exemption,
                    certainty: a.certainty,
                    asserted_by: a.asserted_by.clone(),
                    reason: a.reason.clone(),
                }),
        );
        out
    }
}
