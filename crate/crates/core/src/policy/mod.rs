//! Erasure policy: grounds against exemptions, mandatory explanations, and
//! response deadlines. Everything here is a pure function of its inputs.

pub mod deadline;
pub mod evaluate;
pub mod model;
pub mod rules;

pub use deadline::{deadline_check, DeadlinePolicy, DeadlineStatus, ResponseTimes};
pub use evaluate::{evaluate, validate_decision, EvaluationContext};
pub use model::*;
pub use rules::{PolicyRules, RetentionRule, RulesError, AUDIT_LOG_PURPOSE};
