//! Cleansing delete: a deletion that reaches every surface on both copies
//! and is checked afterwards by an independent byte-level residue scan.

pub mod cleanser;
pub mod plan;
pub mod receipt;
pub mod register;
pub mod scanner;

use thiserror::Error;

use crate::engine::error::EngineError;
use crate::subsystems::replica::{Role, StoreError};

pub use cleanser::{CleanseTarget, Cleanser};
pub use plan::{CleansingPlan, Step, Surface};
pub use receipt::{PropagationReceipt, StepRecord, StepStatus};
pub use scanner::{ResidueMatch, ResidueReport};

#[derive(Debug, Error)]
pub enum CleanseError {
    #[error("step {step} failed on {copy}: {reason}")]
    StepFailed {
        step: Step,
        copy: Role,
        reason: String,
        receipts: Vec<PropagationReceipt>,
    },
    #[error("cleansing completed after its deadline")]
    DeadlineExceeded { receipts: Vec<PropagationReceipt> },
    #[error("receipt {0} not found")]
    NotFound(String),
    #[error("plan leaves surfaces uncovered: {0:?}")]
    PlanIncomplete(Vec<Surface>),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl CleanseError {
    /// Receipts attached to a step failure or late completion.
    pub fn receipts(&self) -> &[PropagationReceipt] {
        match self {
            CleanseError::StepFailed { receipts, .. }
            | CleanseError::DeadlineExceeded { receipts } => receipts,
            _ => &[],
        }
    }
}
