//! Annotated enforcement cases and the failure taxonomy.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::vocabulary;

/// The four tasks an erasure-capable system performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RtbfTask {
    Interface,
    Policy,
    Processing,
    Storage,
}

impl RtbfTask {
    pub const ALL: [RtbfTask; 4] = [
        RtbfTask::Interface,
        RtbfTask::Policy,
        RtbfTask::Processing,
        RtbfTask::Storage,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            RtbfTask::Interface => "interface with data subjects",
            RtbfTask::Policy => "establish deletion policies",
            RtbfTask::Processing => "erase data from data processing systems",
            RtbfTask::Storage => "erase data from data storage systems",
        }
    }

    pub fn color(self) -> &'static str {
        match self {
            RtbfTask::Interface => "#4a90d9",
            RtbfTask::Policy => "#5cb85c",
            RtbfTask::Processing => "#d9534f",
            RtbfTask::Storage => "#f0ad4e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "UI-TROUBLE")]
    UiTrouble,
    #[serde(rename = "VERIFY-MORE")]
    VerifyMore,
    #[serde(rename = "NO-RESPONSE")]
    NoResponse,
    #[serde(rename = "LATE-RESPONSE")]
    LateResponse,
    #[serde(rename = "EXPLAIN")]
    Explain,
    #[serde(rename = "EXMPT-GDPR")]
    ExmptGdpr,
    #[serde(rename = "EXMPT-OTH")]
    ExmptOth,
    #[serde(rename = "EXMPT-ALL")]
    ExmptAll,
    #[serde(rename = "PROPAGATE")]
    Propagate,
    #[serde(rename = "NO_API")]
    NoApi,
    #[serde(rename = "BAD_SERV")]
    BadServ,
    #[serde(rename = "DBMS")]
    Dbms,
    #[serde(rename = "OMIT")]
    Omit,
    #[serde(rename = "DEFLECT")]
    Deflect,
    #[serde(rename = "NO-SRC")]
    NoSrc,
}

impl Category {
    pub const ALL: [Category; 15] = [
        Category::UiTrouble,
        Category::VerifyMore,
        Category::NoResponse,
        Category::LateResponse,
        Category::Explain,
        Category::ExmptGdpr,
        Category::ExmptOth,
        Category::ExmptAll,
        Category::Propagate,
        Category::NoApi,
        Category::BadServ,
        Category::Dbms,
        Category::Omit,
        Category::Deflect,
        Category::NoSrc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::UiTrouble => "UI-TROUBLE",
            Category::VerifyMore => "VERIFY-MORE",
            Category::NoResponse => "NO-RESPONSE",
            Category::LateResponse => "LATE-RESPONSE",
            Category::Explain => "EXPLAIN",
            Category::ExmptGdpr => "EXMPT-GDPR",
            Category::ExmptOth => "EXMPT-OTH",
            Category::ExmptAll => "EXMPT-ALL",
            Category::Propagate => "PROPAGATE",
            Category::NoApi => "NO_API",
            Category::BadServ => "BAD_SERV",
            Category::Dbms => "DBMS",
            Category::Omit => "OMIT",
            Category::Deflect => "DEFLECT",
            Category::NoSrc => "NO-SRC",
        }
    }

    pub fn parse(s: &str) -> Option<Category> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
    }

    /// The task a failure in this category belongs to.
    pub fn task(self) -> RtbfTask {
        use Category::*;
        match self {
            UiTrouble | VerifyMore | NoResponse | LateResponse | Deflect | NoSrc => {
                RtbfTask::Interface
            }
            Explain | ExmptGdpr | ExmptOth | ExmptAll | BadServ => RtbfTask::Policy,
            Propagate | NoApi | Omit => RtbfTask::Processing,
            Dbms => RtbfTask::Storage,
        }
    }

    pub fn describe(self) -> &'static str {
        use Category::*;
        match self {
            UiTrouble => "no working channel to submit erasure requests",
            VerifyMore => "verification stricter than for account creation",
            NoResponse => "request never answered",
            LateResponse => "first response after more than 30 days",
            Explain => "rejection without an individualized explanation",
            ExmptGdpr => "exemptions within the regulation misinterpreted",
            ExmptOth => "interplay with other laws disregarded",
            ExmptAll => "both kinds of exemption mishandled",
            Propagate => "deletion not propagated internally or externally",
            NoApi => "systems without adequate deletion support",
            BadServ => "erasure refused or penalized by degrading service",
            Dbms => "database constraints obstruct erasure",
            Omit => "completion reported while nothing was erased",
            Deflect => "requester redirected to another controller",
            NoSrc => "requester unauthenticated because data came from unknown sources",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnforcementCase {
    pub case_id: String,
    pub year: u32,
    #[serde(default)]
    pub categories: BTreeSet<Category>,
    /// Explicitly left without a category (one-off decisions).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub uncategorized: bool,
    #[serde(default)]
    pub rule_refs: Vec<String>,
    /// Normalized fact tags describing how the rule was applied.
    #[serde(default)]
    pub application: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

impl EnforcementCase {
    pub fn tasks(&self) -> BTreeSet<RtbfTask> {
        self.categories.iter().map(|c| c.task()).collect()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("case {case_id}: {reason}")]
    Invalid { case_id: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Checks the case invariants: at least one category unless marked
/// uncategorized, and every application tag from the vocabulary.
pub fn validate(case: &EnforcementCase) -> Result<(), CorpusError> {
    let bad = |reason: String| {
        Err(CorpusError::Invalid {
            case_id: case.case_id.clone(),
            reason,
        })
    };
    if case.categories.is_empty() && !case.uncategorized {
        return bad("no category and not marked uncategorized".into());
    }
    if !case.categories.is_empty() && case.uncategorized {
        return bad("marked uncategorized but has categories".into());
    }
    for t in &case.application {
        if !vocabulary::contains(t) {
            return bad(format!("application tag {t:?} is not in the vocabulary"));
        }
    }
    Ok(())
}

/// Reads one JSON case per line, validating each.
pub fn read_corpus(reader: impl BufRead) -> Result<Vec<EnforcementCase>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let case: EnforcementCase =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: n + 1,
                reason: e.to_string(),
            })?;
        validate(&case)?;
        if !ids.insert(case.case_id.clone()) {
            return Err(CorpusError::Invalid {
                case_id: case.case_id,
                reason: "duplicate case_id".into(),
            });
        }
        out.push(case);
    }
    Ok(out)
}

pub fn load_corpus(path: &std::path::Path) -> Result<Vec<EnforcementCase>, CorpusError> {
    read_corpus(std::io::BufReader::new(std::fs::File::open(path)?))
}
