//! Document store with verifiable erasure.

pub mod cleanse;
pub mod clock;
pub mod config;
pub mod engine;
pub mod lifecycle;
pub mod policy;
pub mod precedent;
pub mod subsystems;
