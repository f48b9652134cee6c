//! System configuration file (TOML). Consumed by the lifecycle service and
//! inspected by the anti-pattern linter.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::days;
use crate::engine::EngineConfig;
use crate::policy::{DeadlinePolicy, PolicyRules};
use crate::subsystems::eventlog::LogLevel;
use crate::subsystems::replica::ReplicationMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config unparseable: {0}")]
    Unparseable(#[from] toml::de::Error),
    #[error("config unreadable: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub schema: SchemaConfig,
    pub deletion: DeletionConfig,
    pub logging: LoggingConfig,
    pub verification: VerificationPolicy,
    pub deadlines: DeadlineConfig,
    pub replication: ReplicationConfig,
    #[serde(rename = "external")]
    pub externals: Vec<ExternalRecipient>,
    pub policy: PolicyRules,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    /// Field designated as the record's unique identifier.
    pub unique_key: Option<String>,
    pub pii_denylist: Vec<String>,
    /// Reject ingest of denylisted fields that carry no PII tag.
    pub enforce_tagging: bool,
    /// Denylisted fields exempted from tag enforcement.
    pub tagging_exempt: Vec<String>,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        SchemaConfig {
            unique_key: None,
            pii_denylist: EngineConfig::default().pii_denylist,
            enforce_tagging: true,
            tagging_exempt: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeletionMode {
    #[default]
    Erase,
    AnonymizeInPlace,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeletionDepth {
    #[default]
    AllSurfaces,
    ServiceLevelOnly,
    DeactivateOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeletionConfig {
    pub mode: DeletionMode,
    pub depth: DeletionDepth,
    /// Bound on a cleansing run, in hours.
    pub cleanse_deadline_hours: u64,
    /// Cadence at which approved requests coalesce into cleansing batches.
    pub batch_cadence_hours: u64,
}

impl Default for DeletionConfig {
    fn default() -> Self {
        DeletionConfig {
            mode: DeletionMode::Erase,
            depth: DeletionDepth::AllSurfaces,
            cleanse_deadline_hours: 24,
            batch_cadence_hours: 24,
        }
    }
}

impl DeletionConfig {
    pub fn cleanse_deadline(&self) -> Duration {
        Duration::from_secs(self.cleanse_deadline_hours * 3600)
    }

    pub fn batch_cadence(&self) -> Duration {
        Duration::from_secs(self.batch_cadence_hours * 3600)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoggingConfig {
    pub level: LogLevel,
    /// `None` keeps log lines forever; spelled `"never"` in the file.
    #[serde(with = "retention")]
    pub retention_days: Option<u64>,
    /// Retention of the erasure-request audit trail.
    pub audit_retention_days: u64,
}

impl Default for LoggingConfig {
    fn default() -> Self {
        LoggingConfig {
            level: LogLevel::Info,
            retention_days: Some(30),
            audit_retention_days: 1095,
        }
    }
}

mod retention {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Days(u64),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(d) => Repr::Days(*d).serialize(s),
            None => Repr::Word("never".into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Days(n) => Ok(Some(n)),
            Repr::Word(w) if w == "never" => Ok(None),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "expected days or \"never\", got `{w}`"
            ))),
        }
    }
}

/// Credential strength, ordered weakest first.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum CredentialLevel {
    None,
    #[default]
    Email,
    StrongId,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerificationPolicy {
    /// Credentials required to create an account.
    pub registration_level: CredentialLevel,
    /// Credentials required to exercise erasure rights.
    pub rights_level: CredentialLevel,
}

impl VerificationPolicy {
    pub fn is_proportional(&self) -> bool {
        self.rights_level <= self.registration_level
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeadlineConfig {
    pub ack_within_days: u64,
    pub decide_within_days: u64,
    /// Acknowledge requests automatically on intake.
    pub auto_ack: bool,
}

impl Default for DeadlineConfig {
    fn default() -> Self {
        DeadlineConfig {
            ack_within_days: 30,
            decide_within_days: 30,
            auto_ack: true,
        }
    }
}

impl DeadlineConfig {
    pub fn policy(&self) -> DeadlinePolicy {
        DeadlinePolicy {
            ack_within: days(self.ack_within_days),
            decide_within: days(self.decide_within_days),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicationConfig {
    pub mode: ReplicationMode,
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        ReplicationConfig {
            mode: ReplicationMode::Strict,
        }
    }
}

/// A third party that receives copies of personal data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalRecipient {
    pub name: String,
    /// Endpoint descriptor of the recipient's deletion API, if it offers one.
    #[serde(default)]
    pub deletion_api: Option<String>,
    /// Whether a legal basis exists for forwarding erasure requests.
    #[serde(default)]
    pub legal_basis: bool,
    /// Whether erasure requests are forwarded to this recipient.
    #[serde(default = "yes")]
    pub propagate: bool,
}

fn yes() -> bool {
    true
}

impl SystemConfig {
    pub fn parse(text: &str) -> Result<SystemConfig, ConfigError> {
        let mut c: SystemConfig = toml::from_str(text)?;
        c.policy.ensure_builtin();
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<SystemConfig, ConfigError> {
        SystemConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn engine_config(&self) -> EngineConfig {
        let enforced: Vec<String> = if self.schema.enforce_tagging {
            self.schema
                .pii_denylist
                .iter()
                .filter(|f| {
                    !self
                        .schema
                        .tagging_exempt
                        .iter()
                        .any(|e| e.eq_ignore_ascii_case(f))
                })
                .cloned()
                .collect()
        } else {
            Vec::new()
        };
        EngineConfig {
            pii_denylist: enforced,
            log_level: self.logging.level,
            log_retention: self.logging.retention_days.map(days),
            ..EngineConfig::default()
        }
    }
}
