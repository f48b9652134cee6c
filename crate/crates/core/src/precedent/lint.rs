//! Configuration linter for the six erasure anti-patterns.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, DeletionDepth, DeletionMode, SystemConfig};
use crate::subsystems::eventlog::LogLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AntiPattern {
    PersonalDataAsPrimaryKey,
    AnonymizeInsteadOfDelete,
    UntaggedPersonalData,
    DeletionDepth,
    UnboundedLogging,
    ExcessiveVerification,
}

impl AntiPattern {
    pub const ALL: [AntiPattern; 6] = [
        AntiPattern::PersonalDataAsPrimaryKey,
        AntiPattern::AnonymizeInsteadOfDelete,
        AntiPattern::UntaggedPersonalData,
        AntiPattern::DeletionDepth,
        AntiPattern::UnboundedLogging,
        AntiPattern::ExcessiveVerification,
    ];

    pub fn id(self) -> u8 {
        match self {
            AntiPattern::PersonalDataAsPrimaryKey => 1,
            AntiPattern::AnonymizeInsteadOfDelete => 2,
            AntiPattern::UntaggedPersonalData => 3,
            AntiPattern::DeletionDepth => 4,
            AntiPattern::UnboundedLogging => 5,
            AntiPattern::ExcessiveVerification => 6,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            AntiPattern::PersonalDataAsPrimaryKey => "Using personal data as primary keys",
            AntiPattern::AnonymizeInsteadOfDelete => {
                "Anonymizing personal data instead of deleting"
            }
            AntiPattern::UntaggedPersonalData => "Keeping personal data untagged",
            AntiPattern::DeletionDepth => "Mismanaging the depth of deletion",
            AntiPattern::UnboundedLogging => "Logging without checks and bounds",
            AntiPattern::ExcessiveVerification => "Employing excessive verification",
        }
    }
}

impl fmt::Display for AntiPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AP{} {}", self.id(), self.title())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntiPatternFinding {
    pub pattern: AntiPattern,
    pub id: u8,
    /// Dotted path of the offending key.
    pub location: String,
    pub message: String,
    pub severity: Severity,
}

impl AntiPatternFinding {
    fn new(
        pattern: AntiPattern,
        location: impl Into<String>,
        message: impl Into<String>,
        severity: Severity,
    ) -> Self {
        AntiPatternFinding {
            pattern,
            id: pattern.id(),
            location: location.into(),
            message: message.into(),
            severity,
        }
    }
}

#[derive(Debug, Error)]
pub enum LintError {
    #[error("config unparseable: {0}")]
    ConfigUnparseable(String),
}

impl From<ConfigError> for LintError {
    fn from(e: ConfigError) -> Self {
        LintError::ConfigUnparseable(e.to_string())
    }
}

pub fn lint_str(text: &str) -> Result<Vec<AntiPatternFinding>, LintError> {
    Ok(lint(&SystemConfig::parse(text)?))
}

pub fn lint_file(path: &std::path::Path) -> Result<Vec<AntiPatternFinding>, LintError> {
    Ok(lint(&SystemConfig::load(path)?))
}

pub fn lint(c: &SystemConfig) -> Vec<AntiPatternFinding> {
    let mut out = Vec::new();
    let denied = |f: &str| {
        c.schema
            .pii_denylist
            .iter()
            .any(|d| d.eq_ignore_ascii_case(f))
    };

    if let Some(key) = &c.schema.unique_key {
        if denied(key) {
            out.push(AntiPatternFinding::new(
                AntiPattern::PersonalDataAsPrimaryKey,
                "schema.unique_key",
                format!("personal field `{key}` is the unique identifier; erasing it breaks key constraints"),
                Severity::High,
            ));
        }
    }

    if c.deletion.mode == DeletionMode::AnonymizeInPlace {
        out.push(AntiPatternFinding::new(
            AntiPattern::AnonymizeInsteadOfDelete,
            "deletion.mode",
            "erasure requests anonymize records in place instead of deleting them",
            Severity::High,
        ));
    }

    if !c.schema.enforce_tagging && !c.schema.pii_denylist.is_empty() {
        out.push(AntiPatternFinding::new(
            AntiPattern::UntaggedPersonalData,
            "schema.enforce_tagging",
            "personal fields may be stored without subject and purpose tags",
            Severity::High,
        ));
    }
    for (i, f) in c.schema.tagging_exempt.iter().enumerate() {
        if denied(f) {
            out.push(AntiPatternFinding::new(
                AntiPattern::UntaggedPersonalData,
                format!("schema.tagging_exempt[{i}]"),
                format!("personal field `{f}` is exempt from tagging"),
                Severity::Medium,
            ));
        }
    }

    match c.deletion.depth {
        DeletionDepth::AllSurfaces => {}
        DeletionDepth::ServiceLevelOnly | DeletionDepth::DeactivateOnly => {
            out.push(AntiPatternFinding::new(
                AntiPattern::DeletionDepth,
                "deletion.depth",
                "deletion stops short of every storage surface (incomplete deletion)",
                Severity::High,
            ))
        }
    }
    for (i, r) in c.externals.iter().enumerate() {
        if r.propagate && !r.legal_basis {
            out.push(AntiPatternFinding::new(
                AntiPattern::DeletionDepth,
                format!("external[{i}]"),
                format!("erasure forwarded to `{}` without a legal basis", r.name),
                Severity::Medium,
            ));
        }
    }

    if c.logging.retention_days.is_none() {
        let trace = c.logging.level == LogLevel::Trace;
        out.push(AntiPatternFinding::new(
            AntiPattern::UnboundedLogging,
            "logging.retention_days",
            if trace {
                "trace logging with no expiry keeps request payloads forever"
            } else {
                "log lines have no expiry date"
            },
            if trace {
                Severity::High
            } else {
                Severity::Medium
            },
        ));
    }

    let v = c.verification;
    if !v.is_proportional() {
        out.push(AntiPatternFinding::new(
            AntiPattern::ExcessiveVerification,
            "verification.rights_level",
            format!(
                "exercising rights needs {:?} credentials while registration needs only {:?}",
                v.rights_level, v.registration_level
            ),
            Severity::High,
        ));
    }
    out
}
