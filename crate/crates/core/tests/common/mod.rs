#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use forget_core::clock::{SharedClock, SimClock, Timestamp};
use forget_core::engine::document::{DocumentDraft, PiiTag};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn sim() -> (SimClock, SharedClock) {
    let c = SimClock::new(Timestamp(1_000));
    let s = c.shared();
    (c, s)
}

pub fn sentinel(rng: &mut impl Rng) -> String {
    format!("{:016x}", rng.gen::<u64>())
}

/// A document with a sentinel token in its body and an email tagged to `subject`.
pub fn doc(rng: &mut impl Rng, subject: &str, words: &[&str]) -> (DocumentDraft, String) {
    let s = sentinel(rng);
    let mut body: Vec<String> = words.iter().map(|w| w.to_string()).collect();
    body.push(s.clone());
    let email = format!("{subject}.{}@example.org", &s[..6]);
    let d = DocumentDraft::new().field("body", body.join(" ")).personal(
        "email",
        email,
        PiiTag::new(subject, "contact"),
    );
    (d, s)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Counts occurrences of `needle` in every file under `dir`. Reads raw bytes only.
pub fn grep_dir(dir: &Path, needle: &str) -> usize {
    let mut n = 0;
    if !dir.exists() {
        return 0;
    }
    for entry in walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(|e| e.ok())
    {
        if entry.file_type().is_file() {
            let bytes = std::fs::read(entry.path()).unwrap_or_default();
            n += count(&bytes, needle.as_bytes());
        }
    }
    n
}

pub fn count(hay: &[u8], needle: &[u8]) -> usize {
    if needle.is_empty() || hay.len() < needle.len() {
        return 0;
    }
    hay.windows(needle.len()).filter(|w| *w == needle).count()
}

pub fn arc<T>(t: T) -> Arc<T> {
    Arc::new(t)
}
