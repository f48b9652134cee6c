//! Response deadlines.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::{days, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeadlinePolicy {
    #[serde(with = "crate::clock::duration_ms")]
    pub ack_within: Duration,
    #[serde(with = "crate::clock::duration_ms")]
    pub decide_within: Duration,
}

impl Default for DeadlinePolicy {
    fn default() -> Self {
        DeadlinePolicy {
            ack_within: days(30),
            decide_within: days(30),
        }
    }
}

impl DeadlinePolicy {
    pub fn is_valid(&self) -> bool {
        self.ack_within <= self.decide_within
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeadlineStatus {
    Ok,
    LateResponse,
    NoResponse,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseTimes {
    pub received_at: Timestamp,
    pub acknowledged_at: Option<Timestamp>,
    /// Notice that the response period is extended for complex processing.
    pub extension_notice_at: Option<Timestamp>,
}

pub fn deadline_check(
    t: &ResponseTimes,
    policy: &DeadlinePolicy,
    now: Timestamp,
) -> DeadlineStatus {
    let window_end = t.received_at.plus(policy.ack_within);
    let extended = t.extension_notice_at.is_some_and(|e| e <= window_end);
    match t.acknowledged_at {
        Some(ack) if ack > window_end && !extended => DeadlineStatus::LateResponse,
        Some(_) => DeadlineStatus::Ok,
        None if now > window_end && !extended => DeadlineStatus::NoResponse,
        None => DeadlineStatus::Ok,
    }
}
