//! Auxiliary data surfaces that retain data beyond deletion: caches,
//! translog, snapshots, event log and the replica.

pub mod cache;
pub mod eventlog;
pub mod replica;
pub mod snapshot;
pub mod translog;
