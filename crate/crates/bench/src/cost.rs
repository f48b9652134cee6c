//! Modeled service time. Throughput is computed on simulated time derived
//! from the engine's work counters, so runs are deterministic and
//! independent of the host.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use forget_core::engine::{CacheOutcome, SearchResponse};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Fixed per-request cost (parsing, coordination, response encoding).
    pub overhead_us: f64,
    /// Replaces execution cost on a request-cache hit.
    pub cache_hit_us: f64,
    pub per_term_us: f64,
    pub per_posting_us: f64,
    pub per_doc_us: f64,
    /// Maintenance: rewriting one live document during a merge or snapshot rewrite.
    pub rewrite_doc_us: f64,
    /// Maintenance: fixed cost of a flush, cache clear or log cull.
    pub maintenance_us: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            overhead_us: 4000.0,
            cache_hit_us: 200.0,
            per_term_us: 0.5,
            per_posting_us: 0.25,
            per_doc_us: 10.0,
            rewrite_doc_us: 5.0,
            maintenance_us: 1000.0,
        }
    }
}

impl CostModel {
    pub fn query(&self, r: &SearchResponse) -> Duration {
        let exec = match r.cache {
            CacheOutcome::Hit => self.cache_hit_us,
            CacheOutcome::Miss => {
                r.stats.terms_examined as f64 * self.per_term_us
                    + r.stats.postings_visited as f64 * self.per_posting_us
                    + r.stats.docs_loaded as f64 * self.per_doc_us
            }
        };
        us(self.overhead_us + exec)
    }

    pub fn rewrite(&self, docs: usize) -> Duration {
        us(self.maintenance_us + docs as f64 * self.rewrite_doc_us)
    }

    pub fn maintenance(&self) -> Duration {
        us(self.maintenance_us)
    }
}

fn us(v: f64) -> Duration {
    Duration::from_nanos((v * 1000.0).round() as u64)
}
