//! Grounds, exemptions and decisions.

use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ground {
    PurposeExpired,
    ConsentWithdrawn,
    Objection,
    UnlawfulProcessing,
    LegalObligationToErase,
    ChildConsent,
}

impl Ground {
    pub const ALL: [Ground; 6] = [
        Ground::PurposeExpired,
        Ground::ConsentWithdrawn,
        Ground::Objection,
        Ground::UnlawfulProcessing,
        Ground::LegalObligationToErase,
        Ground::ChildConsent,
    ];

    pub fn article(self) -> &'static str {
        match self {
            Ground::PurposeExpired => "Art. 17(1)(a)",
            Ground::ConsentWithdrawn => "Art. 17(1)(b)",
            Ground::Objection => "Art. 17(1)(c)",
            Ground::UnlawfulProcessing => "Art. 17(1)(d)",
            Ground::LegalObligationToErase => "Art. 17(1)(e)",
            Ground::ChildConsent => "Art. 17(1)(f)",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Ground::PurposeExpired => "data no longer necessary for its purpose",
            Ground::ConsentWithdrawn => "consent withdrawn",
            Ground::Objection => "objection to processing",
            Ground::UnlawfulProcessing => "unlawful processing",
            Ground::LegalObligationToErase => "legal obligation to erase",
            Ground::ChildConsent => "data collected from a child for online services",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exemption {
    FreedomOfExpression,
    LegalObligationOrPublicTask,
    PublicHealth,
    ArchivingResearch,
    LegalClaims,
}

impl Exemption {
    pub const ALL: [Exemption; 5] = [
        Exemption::FreedomOfExpression,
        Exemption::LegalObligationOrPublicTask,
        Exemption::PublicHealth,
        Exemption::ArchivingResearch,
        Exemption::LegalClaims,
    ];

    pub fn article(self) -> &'static str {
        match self {
            Exemption::FreedomOfExpression => "Art. 17(3)(a)",
            Exemption::LegalObligationOrPublicTask => "Art. 17(3)(b)",
            Exemption::PublicHealth => "Art. 17(3)(c)",
            Exemption::ArchivingResearch => "Art. 17(3)(d)",
            Exemption::LegalClaims => "Art. 17(3)(e)",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Exemption::FreedomOfExpression => "freedom of expression and information",
            Exemption::LegalObligationOrPublicTask => {
                "legal obligation or task in the public interest"
            }
            Exemption::PublicHealth => "public health",
            Exemption::ArchivingResearch => "archiving, research or statistics",
            Exemption::LegalClaims => "establishment, exercise or defence of legal claims",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    Clear,
    Ambiguous,
}

/// A ground claimed by the requester. `established` records whether the
/// supporting facts (consent record, objection, ...) check out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundClaim {
    pub ground: Ground,
    pub established: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub facts: String,
}

impl GroundClaim {
    pub fn holds(ground: Ground) -> Self {
        GroundClaim {
            ground,
            established: true,
            facts: String::new(),
        }
    }

    pub fn unproven(ground: Ground) -> Self {
        GroundClaim {
            ground,
            established: false,
            facts: String::new(),
        }
    }
}

/// An exemption enters evaluation only with a record of who asserted it and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemptionAssertion {
    pub exemption: Exemption,
    pub certainty: Certainty,
    pub asserted_by: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    #[default]
    NaturalPerson,
    Organization,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Citation {
    Exemption(Exemption),
    GroundNotMet(Ground),
    NoGroundClaimed,
    NotANaturalPerson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Honor,
    Reject {
        explanation: String,
        cited: Vec<Citation>,
    },
    Escalate {
        reason: String,
    },
}

impl Outcome {
    pub fn is_honor(&self) -> bool {
        matches!(self, Outcome::Honor)
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, Outcome::Reject { .. })
    }

    pub fn is_escalate(&self) -> bool {
        matches!(self, Outcome::Escalate { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "by", content = "id", rename_all = "snake_case")]
pub enum DecidedBy {
    Rules,
    Officer(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    #[serde(flatten)]
    pub outcome: Outcome,
    pub decided_by: DecidedBy,
    pub decided_at: Timestamp,
    /// Exemptions on record when the decision was taken.
    #[serde(default)]
    pub considered: Vec<ExemptionAssertion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    /// Rejection without an explanation (the EXPLAIN failure).
    MissingExplanation,
    /// Rejection citing neither an exemption nor a failed ground.
    MissingCitation,
    HonorDespiteClearExemption {
        exemption: Exemption,
    },
}
