//! Deterministic synthetic corpus of Q&A-style posts.
//!
//! Body and title words are drawn from a Zipf distribution over a generated
//! vocabulary; word `rank` 1 is the most frequent.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use forget_core::engine::document::{DocumentDraft, PiiTag};

/// Subject whose posts are the erasure targets.
pub const TARGET_SUBJECT: &str = "rtbf-target";

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pa", "do", "fi", "gu", "ha", "je", "bo",
];

pub const TAGS: [&str; 40] = [
    "rust", "java", "python", "sql", "linux", "git", "docker", "regex", "json", "http", "css",
    "html", "bash", "android", "ios", "swift", "kotlin", "scala", "haskell", "go", "ruby", "perl",
    "php", "node", "react", "vue", "angular", "spark", "kafka", "redis", "mysql", "postgres",
    "mongodb", "nginx", "aws", "azure", "excel", "matlab", "unity", "wasm",
];

pub const FIRST_YEAR: u32 = 2008;
pub const LAST_YEAR: u32 = 2023;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSpec {
    pub size: usize,
    pub seed: u64,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub body_words: usize,
    pub title_words: usize,
    /// Share of posts written by [`TARGET_SUBJECT`].
    pub target_share: f64,
    /// Distinct non-target authors; ids are fixed-width so no personal value
    /// is a byte substring of another.
    pub users: usize,
}

impl TrackSpec {
    pub fn new(size: usize, seed: u64) -> Self {
        TrackSpec {
            size,
            seed,
            ..TrackSpec::default()
        }
    }

    /// Probability of the word at `rank` under the declared Zipf law.
    pub fn word_probability(&self, rank: usize) -> f64 {
        let h: f64 = (1..=self.vocab_size)
            .map(|k| (k as f64).powf(-self.zipf_exponent))
            .sum();
        (rank as f64).powf(-self.zipf_exponent) / h
    }
}

impl Default for TrackSpec {
    fn default() -> Self {
        TrackSpec {
            size: 100_000,
            seed: 42,
            vocab_size: 5000,
            zipf_exponent: 1.0,
            body_words: 24,
            title_words: 4,
            target_share: 0.01,
            users: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub spec: TrackSpec,
    pub docs: Vec<DocumentDraft>,
}

impl Track {
    pub fn target_count(&self) -> usize {
        self.docs.iter().filter(|d| is_target(d)).count()
    }
}

pub fn is_target(d: &DocumentDraft) -> bool {
    d.pii_tags
        .values()
        .any(|t| t.subject_id.as_str() == TARGET_SUBJECT)
}

/// Vocabulary word of 1-based `rank`: a unique run of at least two syllables.
pub fn word(rank: usize) -> String {
    let mut n = rank - 1 + SYLLABLES.len();
    let mut parts = Vec::new();
    while n > 0 {
        parts.push(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
    }
    parts.reverse();
    parts.concat()
}

pub fn generate_track(spec: TrackSpec) -> Track {
    assert!(spec.size >= 1, "track size must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf =
        Zipf::new(spec.vocab_size as u64, spec.zipf_exponent).expect("valid zipf parameters");
    let vocab: Vec<String> = (1..=spec.vocab_size).map(word).collect();
    let draw = |rng: &mut ChaCha8Rng, n: usize| -> String {
        (0..n)
            .map(|_| vocab[zipf.sample(rng) as usize - 1].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut docs = Vec::with_capacity(spec.size);
    for i in 0..spec.size {
        let title = draw(&mut rng, spec.title_words);
        let body = draw(&mut rng, spec.body_words);
        let ntags = rng.gen_range(1..=3);
        let mut tags: Vec<&str> = (0..ntags)
            .map(|_| TAGS[rng.gen_range(0..TAGS.len())])
            .collect();
        tags.sort();
        tags.dedup();
        let date = format!(
            "{:04}-{:02}-{:02}",
            rng.gen_range(FIRST_YEAR..=LAST_YEAR),
            rng.gen_range(1..=12),
            rng.gen_range(1..=28)
        );
        let answers = format!("{:04}", rng.gen_range(0..50));
        let (subject, author, email) = if rng.gen_bool(spec.target_share) {
            (
                TARGET_SUBJECT.to_string(),
                "Target Person".to_string(),
                "target.person@example.org".to_string(),
            )
        } else {
            let u = rng.gen_range(0..spec.users);
            (
                format!("user-{u:05}"),
                format!("User {u:05}"),
                format!("user{u:05}@example.org"),
            )
        };
        docs.push(
            DocumentDraft::new()
                .field("title", title)
                .field("body", body)
                .field("tags", tags.join(" "))
                .field("date", date)
                .field("answers", answers)
                .field("post", format!("p{i:07}"))
                .personal("author", author, PiiTag::new(subject.clone(), "forum"))
                .personal("email", email, PiiTag::new(subject, "forum")),
        );
    }
    Track { spec, docs }
}
