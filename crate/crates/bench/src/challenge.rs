//! The six query challenges and their deterministic query pools.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use forget_core::engine::query::{Query, SearchRequest};

use crate::track::{word, TrackSpec, FIRST_YEAR, LAST_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChallengeName {
    HighLow,
    Prefix,
    Range,
    Fuzzy,
    Wildcard,
    AggWcFz,
}

impl ChallengeName {
    pub const ALL: [ChallengeName; 6] = [
        ChallengeName::HighLow,
        ChallengeName::Prefix,
        ChallengeName::Range,
        ChallengeName::Fuzzy,
        ChallengeName::Wildcard,
        ChallengeName::AggWcFz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChallengeName::HighLow => "high-low",
            ChallengeName::Prefix => "prefix",
            ChallengeName::Range => "range",
            ChallengeName::Fuzzy => "fuzzy",
            ChallengeName::Wildcard => "wildcard",
            ChallengeName::AggWcFz => "agg-wc-fz",
        }
    }

    pub fn parse(s: &str) -> Option<ChallengeName> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }

    pub fn describe(self) -> &'static str {
        match self {
            ChallengeName::HighLow => "conjunction of a high-frequency and a low-frequency term",
            ChallengeName::Prefix => "term prefix match",
            ChallengeName::Range => "date range",
            ChallengeName::Fuzzy => "fuzzy term match within edit distance",
            ChallengeName::Wildcard => "wildcard term match",
            ChallengeName::AggWcFz => "wildcard or fuzzy match aggregated by tag",
        }
    }

    /// Throughput (ops/s) published for a 36M-document corpus on a 64-core
    /// server. Context only; not reproducible at desk scale.
    pub fn reference_ops_per_sec(self) -> f64 {
        match self {
            ChallengeName::HighLow => 164.4,
            ChallengeName::Prefix => 73.2,
            ChallengeName::Range => 55.9,
            ChallengeName::Fuzzy => 23.1,
            ChallengeName::Wildcard => 15.0,
            ChallengeName::AggWcFz => 6.7,
        }
    }
}

impl fmt::Display for ChallengeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Challenge {
    pub name: ChallengeName,
    pub warmup: usize,
    pub measured: usize,
    /// Distinct queries in the workload.
    pub pool: usize,
    /// Zipf exponent of query popularity over the pool.
    pub popularity: f64,
    pub seed: u64,
}

impl Challenge {
    pub fn new(name: ChallengeName) -> Self {
        Challenge {
            name,
            warmup: 200,
            measured: 500,
            pool: 1000,
            popularity: 1.3,
            seed: 7,
        }
    }

    pub fn queries(&self, spec: &TrackSpec) -> Vec<SearchRequest> {
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.seed ^ (self.name as u64).wrapping_mul(0x9e37_79b9));
        (0..self.pool.max(1))
            .map(|_| SearchRequest::new(make_query(self.name, spec, &mut rng)))
            .collect()
    }
}

fn body() -> Option<String> {
    Some("body".into())
}

fn mid_word(spec: &TrackSpec, rng: &mut ChaCha8Rng) -> String {
    word(
        rng.gen_range(20..=200.min(spec.vocab_size).max(20))
            .min(spec.vocab_size),
    )
}

fn fuzzy(spec: &TrackSpec, rng: &mut ChaCha8Rng) -> Query {
    let mut w: Vec<char> = mid_word(spec, rng).chars().collect();
    let i = rng.gen_range(0..w.len());
    w[i] = (b'a' + rng.gen_range(0..26)) as char;
    Query::Fuzzy {
        field: body(),
        term: w.into_iter().collect(),
        max_edits: 1,
    }
}

fn wildcard(spec: &TrackSpec, rng: &mut ChaCha8Rng) -> Query {
    let w = mid_word(spec, rng);
    let last = w.chars().last().expect("words are non-empty");
    Query::Wildcard {
        field: body(),
        pattern: format!("{}*{last}", &w[..2]),
    }
}

fn make_query(name: ChallengeName, spec: &TrackSpec, rng: &mut ChaCha8Rng) -> Query {
    let n = spec.vocab_size;
    match name {
        ChallengeName::HighLow => {
            let high = word(rng.gen_range(1..=10.min(n)));
            let low = word(rng.gen_range((n / 5).max(1)..=n));
            Query::BooleanAnd {
                field: body(),
                terms: vec![high, low],
            }
        }
        ChallengeName::Prefix => Query::Prefix {
            field: body(),
            prefix: mid_word(spec, rng)[..3].to_string(),
        },
        ChallengeName::Range => {
            let y = rng.gen_range(FIRST_YEAR..=LAST_YEAR);
            let m = rng.gen_range(1..=6);
            Query::Range {
                field: "date".into(),
                gte: Some(format!("{y:04}-{m:02}-01")),
                lte: Some(format!("{y:04}-{:02}-28", m + 6)),
            }
        }
        ChallengeName::Fuzzy => fuzzy(spec, rng),
        ChallengeName::Wildcard => wildcard(spec, rng),
        ChallengeName::AggWcFz => Query::Aggregate {
            any_of: vec![wildcard(spec, rng), fuzzy(spec, rng)],
            group_by: "tags".into(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in ChallengeName::ALL {
            assert_eq!(ChallengeName::parse(c.as_str()), Some(c));
            assert_eq!(serde_json::to_value(c).unwrap(), c.as_str());
        }
    }

    #[test]
    fn query_pools_are_valid_and_deterministic() {
        let spec = TrackSpec::new(100, 1);
        for c in ChallengeName::ALL {
            let ch = Challenge::new(c);
            let a = ch.queries(&spec);
            assert_eq!(a, ch.queries(&spec));
            assert_eq!(a.len(), 1000);
            for q in &a {
                q.query.normalized().unwrap();
            }
        }
    }
}
