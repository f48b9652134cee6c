//! Erasure-request lifecycle and its HTTP-style API.

pub mod api;
pub mod audit;
pub mod model;
pub mod service;

pub use api::{Api, ApiResponse, DecisionForm, DecisionKind};
pub use audit::{AuditLog, AuditRecord};
pub use model::*;
pub use service::{
    officer_decision, pseudonym, BatchReport, LifecycleError, QueueEntry, Service, SubmitRequest,
    TickReport,
};
