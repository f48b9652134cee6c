//! Benchmark harness: synthetic track generation, the six query challenges,
//! modeled-time throughput measurement and the cleansing-impact experiment.

pub mod challenge;
pub mod cost;
pub mod report;
pub mod run;
pub mod track;

pub use challenge::{Challenge, ChallengeName};
pub use cost::CostModel;
pub use report::{BenchEvent, BenchReport, EventKind, ImpactSummary, Summary, WindowSample};
pub use run::{
    cleansing_impact, coefficient_of_variation, repeat_challenge, run_challenge, run_impact,
    BenchEnv, BenchError, ImpactMode, Injection, Timeline,
};
pub use track::{generate_track, is_target, word, Track, TrackSpec, TARGET_SUBJECT};
