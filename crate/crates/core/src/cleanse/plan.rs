//! Cleansing plan: the five ordered steps and the surfaces they cover.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::subsystems::replica::Role;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Surface {
    Segments,
    Caches,
    Translog,
    Snapshots,
    Logs,
}

impl Surface {
    pub const ALL: [Surface; 5] = [
        Surface::Segments,
        Surface::Caches,
        Surface::Translog,
        Surface::Snapshots,
        Surface::Logs,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    ExpungeSegments,
    ClearCaches,
    FlushTranslog,
    RewriteSnapshots,
    CullLogs,
}

impl Step {
    pub const ORDER: [Step; 5] = [
        Step::ExpungeSegments,
        Step::ClearCaches,
        Step::FlushTranslog,
        Step::RewriteSnapshots,
        Step::CullLogs,
    ];

    pub fn surface(self) -> Surface {
        match self {
            Step::ExpungeSegments => Surface::Segments,
            Step::ClearCaches => Surface::Caches,
            Step::FlushTranslog => Surface::Translog,
            Step::RewriteSnapshots => Surface::Snapshots,
            Step::CullLogs => Surface::Logs,
        }
    }
}

impl std::fmt::Display for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_string(self).unwrap_or_default();
        f.write_str(s.trim_matches('"'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleansingPlan {
    pub steps: Vec<(Step, Role)>,
    #[serde(with = "crate::clock::duration_ms")]
    pub deadline: Duration,
}

impl CleansingPlan {
    /// Every step runs on the primary, then on the replica.
    pub fn standard(deadline: Duration) -> Self {
        let steps = Step::ORDER
            .iter()
            .flat_map(|&s| Role::BOTH.map(|c| (s, c)))
            .collect();
        CleansingPlan { steps, deadline }
    }

    /// Surfaces in `registered` that no step of the plan reaches on both copies.
    pub fn uncovered(&self, registered: &[Surface]) -> Vec<Surface> {
        registered
            .iter()
            .copied()
            .filter(|s| {
                Role::BOTH.iter().any(|c| {
                    !self
                        .steps
                        .iter()
                        .any(|(st, cc)| st.surface() == *s && cc == c)
                })
            })
            .collect()
    }
}
