//! Request and query caches.
//!
//! The request cache stores whole search responses (including stored source
//! of top hits) keyed by index generation and canonical request. The query
//! cache stores per-segment clause results. Both are bounded LRUs.

use std::num::NonZeroUsize;
use std::sync::Arc;

use lru::LruCache;
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::engine::segment::{ClauseHits, SegmentId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub clears: u64,
    pub hits_since_clear: u64,
    pub misses_since_clear: u64,
    pub entries: usize,
}

impl CacheStats {
    fn hit(&mut self) {
        self.hits += 1;
        self.hits_since_clear += 1;
    }

    fn miss(&mut self) {
        self.misses += 1;
        self.misses_since_clear += 1;
    }

    fn cleared(&mut self) {
        self.clears += 1;
        self.hits_since_clear = 0;
        self.misses_since_clear = 0;
        self.entries = 0;
    }
}

#[derive(Debug)]
pub struct RequestCache<V> {
    lru: LruCache<String, (V, Option<Timestamp>)>,
    stats: CacheStats,
}

impl<V: Clone + Serialize> RequestCache<V> {
    pub fn new(capacity: usize) -> Self {
        RequestCache {
            lru: LruCache::new(NonZeroUsize::new(capacity.max(1)).unwrap()),
            stats: CacheStats::default(),
        }
    }

    pub fn key(generation: u64, size: usize, canonical_query: &str) -> String {
        format!("{generation}|{size}|{canonical_query}")
    }

    /// Entries past `valid_until` count as misses and are dropped.
    pub fn get(&mut self, key: &str, now: Timestamp) -> Option<V> {
        let fresh = match self.lru.get(key) {
            Some((v, until)) if until.map_or(true, |u| now < u) => Some(v.clone()),
            Some(_) => {
                self.lru.pop(key);
                None
            }
            None => None,
        };
        match fresh {
            Some(_) => self.stats.hit(),
            None => self.stats.miss(),
        }
        self.stats.entries = self.lru.len();
        fresh
    }

    pub fn put(&mut self, key: String, value: V, valid_until: Option<Timestamp>) {
        self.lru.put(key, (value, valid_until));
        self.stats.entries = self.lru.len();
    }

    pub fn clear(&mut self) {
        self.lru.clear();
        self.stats.cleared();
    }

    pub fn len(&self) -> usize {
        self.lru.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lru.is_empty()
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    /// Serialized contents, used to inspect what the cache retains.
    pub fn dump(&self) -> Vec<u8> {
        let entries: Vec<(&String, &V)> = self.lru.iter().map(|(k, (v, _))| (k, v)).collect();
        serde_json::to_vec(&entries).unwrap_or_default()
    }
}

#[derive(Debug)]
pub struct QueryCache {
    lru: LruCache<(SegmentId, String), Arc<ClauseHits>>,
    stats: CacheStats,
}

impl QueryCache {
    pub fn new(capacity: usize) -> Self {
        QueryCache {
            lru: LruCache::new(NonZeroUsize::new(capacity.max(1)).unwrap()),
            stats: CacheStats::default(),
        }
    }

    pub fn get(&mut self, seg: SegmentId, clause: &str) -> Option<Arc<ClauseHits>> {
        let got = self.lru.get(&(seg, clause.to_string())).cloned();
        match got {
            Some(_) => self.stats.hit(),
            None => self.stats.miss(),
        }
        got
    }

    pub fn put(&mut self, seg: SegmentId, clause: String, hits: Arc<ClauseHits>) {
        self.lru.put((seg, clause), hits);
        self.stats.entries = self.lru.len();
    }

    /// Drops entries of segments that no longer exist.
    pub fn retain_segments(&mut self, live: &[SegmentId]) {
        let stale: Vec<_> = self
            .lru
            .iter()
            .filter(|((s, _), _)| !live.contains(s))
            .map(|(k, _)| k.clone())
            .collect();
        for k in stale {
            self.lru.pop(&k);
        }
        self.stats.entries = self.lru.len();
    }

    pub fn clear(&mut self) {
        self.lru.clear();
        self.stats.cleared();
    }

    pub fn len(&self) -> usize {
        self.lru.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lru.is_empty()
    }

    pub fn stats(&self) -> CacheStats {
        self.stats
    }

    pub fn dump(&self) -> Vec<u8> {
        let entries: Vec<(String, &String, usize)> = self
            .lru
            .iter()
            .map(|((s, c), h)| (s.to_string(), c, h.len()))
            .collect();
        serde_json::to_vec(&entries).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_cache_expires_and_counts() {
        let mut c: RequestCache<String> = RequestCache::new(4);
        let k = RequestCache::<String>::key(1, 10, "q");
        assert!(c.get(&k, Timestamp(0)).is_none());
        c.put(k.clone(), "v".into(), Some(Timestamp(100)));
        assert_eq!(c.get(&k, Timestamp(99)).as_deref(), Some("v"));
        assert!(c.get(&k, Timestamp(100)).is_none());
        assert!(c.is_empty());
        let s = c.stats();
        assert_eq!((s.hits, s.misses), (1, 2));
        c.clear();
        let s = c.stats();
        assert_eq!((s.hits, s.hits_since_clear, s.clears), (1, 0, 1));
    }

    #[test]
    fn dump_contains_values() {
        let mut c: RequestCache<String> = RequestCache::new(4);
        c.put("k".into(), "secret@example.org".into(), None);
        assert!(String::from_utf8(c.dump())
            .unwrap()
            .contains("secret@example.org"));
        c.clear();
        assert!(!String::from_utf8(c.dump()).unwrap().contains("secret"));
    }

    #[test]
    fn query_cache_retains_live_segments() {
        let mut q = QueryCache::new(8);
        q.put(SegmentId(1), "a".into(), Arc::new(vec![(0, 1)]));
        q.put(SegmentId(2), "a".into(), Arc::new(vec![]));
        q.retain_segments(&[SegmentId(2)]);
        assert!(q.get(SegmentId(1), "a").is_none());
        assert!(q.get(SegmentId(2), "a").is_some());
    }
}
