//! Load generation on simulated time and the injected-event experiments.
//!
//! Each worker is a lane with its own next-free time. Queries execute for
//! real against the store, in lane-time order; their service time comes from
//! the [`CostModel`]. Maintenance events run in the background: queries keep
//! flowing for the event's modeled duration, then its effect is applied.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use forget_core::cleanse::{CleanseError, CleanseTarget, Cleanser, Step};
use forget_core::clock::{SimClock, Timestamp};
use forget_core::engine::document::DocId;
use forget_core::engine::query::SearchRequest;
use forget_core::engine::{EngineConfig, Selector};
use forget_core::subsystems::replica::{ReplicationMode, Role, Store, StoreError};

use crate::challenge::Challenge;
use crate::cost::CostModel;
use crate::report::{
    BenchEvent, BenchReport, EventKind, ImpactSummary, Reference, Summary, WindowSample,
};
use crate::track::{is_target, Track, TrackSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("engine unavailable: {0}")]
    EngineUnavailable(String),
    #[error(transparent)]
    Cleanse(#[from] CleanseError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub type Result<T> = std::result::Result<T, BenchError>;

const EPOCH: Timestamp = Timestamp(1_700_000_000_000);
const LOAD_CHUNK: usize = 5000;

pub fn engine_config() -> EngineConfig {
    EngineConfig {
        seal_threshold: 10_000,
        request_cache_capacity: 4096,
        query_cache_capacity: 65_536,
        ..EngineConfig::default()
    }
}

/// A store loaded with a track, ready for challenges.
pub struct BenchEnv {
    pub clock: SimClock,
    pub cleanser: Arc<Cleanser>,
    pub spec: TrackSpec,
    pub docs: Vec<DocId>,
    pub target_docs: Vec<DocId>,
    pub cost: CostModel,
    pub workers: usize,
    pub window: Duration,
}

impl BenchEnv {
    /// Indexes the track under `root`, flushes, and takes one snapshot so
    /// every surface holds data.
    pub fn load(root: &Path, track: &Track) -> Result<BenchEnv> {
        let clock = SimClock::new(EPOCH);
        let store = Arc::new(Store::open(
            root.join("data"),
            engine_config(),
            ReplicationMode::Strict,
            clock.shared(),
        )?);
        let cleanser = Arc::new(Cleanser::open(root, store.clone(), clock.shared())?);
        let mut docs = Vec::with_capacity(track.docs.len());
        let mut target_docs = Vec::new();
        for chunk in track.docs.chunks(LOAD_CHUNK) {
            let ids = cleanser.index_many(chunk.to_vec())?;
            for (d, id) in chunk.iter().zip(ids) {
                if is_target(d) {
                    target_docs.push(id.clone());
                }
                docs.push(id);
            }
        }
        store.flush()?;
        store.snapshot_create()?;
        Ok(BenchEnv {
            clock,
            cleanser,
            spec: track.spec,
            docs,
            target_docs,
            cost: CostModel::default(),
            workers: 1,
            window: Duration::from_millis(250),
        })
    }

    pub fn store(&self) -> &Arc<Store> {
        self.cleanser.store()
    }
}

struct Sim<'a> {
    env: &'a BenchEnv,
    queries: Vec<SearchRequest>,
    popularity: Zipf<f64>,
    rng: ChaCha8Rng,
    lanes: BinaryHeap<Reverse<u64>>,
    completions: Vec<u64>,
    recording: bool,
}

impl<'a> Sim<'a> {
    fn new(env: &'a BenchEnv, challenge: &Challenge) -> Self {
        let workers = env.workers.max(1);
        Sim {
            env,
            queries: challenge.queries(&env.spec),
            popularity: Zipf::new(challenge.pool.max(1) as u64, challenge.popularity)
                .expect("valid popularity"),
            rng: ChaCha8Rng::seed_from_u64(challenge.seed),
            lanes: (0..workers).map(|_| Reverse(0)).collect(),
            completions: Vec::new(),
            recording: false,
        }
    }

    fn now(&self) -> u64 {
        self.lanes.peek().map(|r| r.0).unwrap_or(0)
    }

    fn horizon(&self) -> u64 {
        self.lanes.iter().map(|r| r.0).max().unwrap_or(0)
    }

    fn set_clock(&self, t_ns: u64) {
        self.env.clock.set(Timestamp(EPOCH.0 + t_ns / 1_000_000));
    }

    fn step(&mut self) -> Result<()> {
        let Reverse(t) = self.lanes.pop().expect("at least one lane");
        self.set_clock(t);
        let i = self.popularity.sample(&mut self.rng) as usize - 1;
        let q = &self.queries[i.min(self.queries.len() - 1)];
        let r = self
            .env
            .store()
            .search(q)
            .map_err(|e| BenchError::EngineUnavailable(e.to_string()))?;
        let end = t + self.env.cost.query(&r).as_nanos() as u64;
        if self.recording {
            self.completions.push(end);
        }
        self.lanes.push(Reverse(end));
        Ok(())
    }

    fn run_ops(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }

    fn run_until(&mut self, t: u64) -> Result<()> {
        while self.now() < t {
            self.step()?;
        }
        Ok(())
    }

    /// Ends the warmup: every lane restarts at the latest lane time, which
    /// becomes the origin of measurement.
    fn start_measuring(&mut self) -> u64 {
        let origin = self.horizon();
        let n = self.lanes.len();
        self.lanes = (0..n).map(|_| Reverse(origin)).collect();
        self.recording = true;
        origin
    }

    /// Windowed throughput over `[origin, end)`. A trailing partial window is
    /// kept only when `keep_partial`.
    fn series(&self, origin: u64, end: u64, keep_partial: bool) -> Vec<WindowSample> {
        let w = self.env.window.as_nanos() as u64;
        if end <= origin || w == 0 {
            return Vec::new();
        }
        let span = end - origin;
        let full = (span / w) as usize;
        let partial = span % w;
        let n = full + usize::from(keep_partial && partial > 0);
        let mut counts = vec![0usize; n];
        for &c in &self.completions {
            if c >= origin && c < end {
                let i = ((c - origin) / w) as usize;
                if i < n {
                    counts[i] += 1;
                }
            }
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, k)| {
                let len = if i == full { partial } else { w };
                WindowSample {
                    t_ms: i as u64 * w / 1_000_000,
                    ops_per_sec: k as f64 * 1e9 / len as f64,
                }
            })
            .collect()
    }
}

fn report(
    env: &BenchEnv,
    challenge: &Challenge,
    series: Vec<WindowSample>,
    summary: Summary,
) -> BenchReport {
    BenchReport {
        challenge: challenge.name,
        track_size: env.spec.size,
        track_seed: env.spec.seed,
        workers: env.workers.max(1),
        warmup: challenge.warmup,
        window_ms: env.window.as_millis() as u64,
        series,
        events: Vec::new(),
        summary,
        impact: None,
        reference: Reference {
            ops_per_sec: challenge.name.reference_ops_per_sec(),
            note: "Measured on a 64-core server over a 36M-document corpus; context only, not comparable to \
                   modeled desk-scale throughput."
                .into(),
        },
        cost_model: env.cost,
    }
}

fn ms(ns: u64) -> u64 {
    ns / 1_000_000
}

/// Warmup iterations, then measured iterations. Statistics cover measured
/// iterations only.
pub fn run_challenge(env: &BenchEnv, challenge: &Challenge) -> Result<BenchReport> {
    let mut sim = Sim::new(env, challenge);
    sim.run_ops(challenge.warmup)?;
    let origin = sim.start_measuring();
    let wall = Instant::now();
    sim.run_ops(challenge.measured)?;
    let secs = wall.elapsed().as_secs_f64();
    let end = sim.completions.iter().copied().max().unwrap_or(origin);
    let series = sim.series(origin, end, true);
    let wall_ops = if challenge.measured == 0 || secs == 0.0 {
        0.0
    } else {
        challenge.measured as f64 / secs
    };
    let summary = Summary::from_series(challenge.measured, ms(end - origin), &series, wall_ops);
    Ok(report(env, challenge, series, summary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImpactMode {
    SingleDoc,
    Batch1k,
}

impl ImpactMode {
    pub fn parse(s: &str) -> Option<ImpactMode> {
        match s {
            "single-doc" => Some(ImpactMode::SingleDoc),
            "batch-1k" => Some(ImpactMode::Batch1k),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ImpactMode::SingleDoc => "single-doc",
            ImpactMode::Batch1k => "batch-1k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "injection", rename_all = "kebab-case")]
pub enum Injection {
    /// Clear request and query caches on both copies.
    CacheClear,
    /// Plain delete of `docs` documents, then flush and force-merge with expunge.
    ForcemergeFlush { docs: usize },
    /// A full cleansing delete.
    Cleansing { mode: ImpactMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    #[serde(with = "forget_core::clock::duration_ms")]
    pub baseline: Duration,
    #[serde(with = "forget_core::clock::duration_ms")]
    pub after: Duration,
}

impl Default for Timeline {
    fn default() -> Self {
        Timeline {
            baseline: Duration::from_secs(5),
            after: Duration::from_secs(15),
        }
    }
}

impl BenchEnv {
    /// Documents deleted by a cleansing run in `mode`: targets first, then
    /// other documents in id order when there are too few targets.
    pub fn selection(&self, mode: ImpactMode) -> Vec<DocId> {
        let want = match mode {
            ImpactMode::SingleDoc => 1,
            ImpactMode::Batch1k => 1000,
        }
        .min(self.docs.len());
        let mut out: Vec<DocId> = self.target_docs.iter().take(want).cloned().collect();
        for d in &self.docs {
            if out.len() >= want {
                break;
            }
            if !out.contains(d) {
                out.push(d.clone());
            }
        }
        out
    }
}

struct Injector<'s, 'a> {
    sim: &'s mut Sim<'a>,
    origin: u64,
    t: u64,
    events: Vec<BenchEvent>,
}

impl Injector<'_, '_> {
    /// Lets queries run for `d`, then applies `effect` and records the event.
    fn event(
        &mut self,
        kind: EventKind,
        detail: String,
        d: Duration,
        effect: impl FnOnce() -> Result<()>,
    ) -> Result<()> {
        let start = self.t;
        self.t += d.as_nanos() as u64;
        self.sim.run_until(self.t)?;
        self.sim.set_clock(self.t);
        effect()?;
        self.events.push(BenchEvent {
            kind,
            start_ms: ms(start - self.origin),
            end_ms: ms(self.t - self.origin),
            detail,
        });
        Ok(())
    }
}

/// Warmup, a baseline phase, the injected event(s), then an observation
/// phase. The report carries trough, recovery and post-event throughput.
pub fn run_impact(
    env: &BenchEnv,
    challenge: &Challenge,
    injection: Injection,
    timeline: Timeline,
) -> Result<BenchReport> {
    let mut sim = Sim::new(env, challenge);
    sim.run_ops(challenge.warmup)?;
    let origin = sim.start_measuring();
    let wall = Instant::now();
    let event_start = origin + timeline.baseline.as_nanos() as u64;
    sim.run_until(event_start)?;

    let cost = env.cost;
    let store = env.store().clone();
    let live = |copy: Role| store.engine(copy).stats().live_docs;
    let mut inj = Injector {
        sim: &mut sim,
        origin,
        t: event_start,
        events: Vec::new(),
    };
    let mut impact = ImpactSummary::default();
    match injection {
        Injection::CacheClear => {
            inj.event(
                EventKind::CacheClear,
                String::new(),
                cost.maintenance(),
                || {
                    store.clear_caches()?;
                    Ok(())
                },
            )?;
        }
        Injection::ForcemergeFlush { docs } => {
            let ids: Vec<DocId> = env.target_docs.iter().take(docs).cloned().collect();
            impact.deleted_docs = ids.len();
            let sel = Selector::DocIds { doc_ids: ids };
            inj.event(
                EventKind::MarkDelete,
                format!("{} docs", impact.deleted_docs),
                cost.maintenance(),
                || {
                    store.mark_delete(&sel)?;
                    Ok(())
                },
            )?;
            inj.event(EventKind::Flush, String::new(), cost.maintenance(), || {
                store.flush()?;
                Ok(())
            })?;
            inj.event(
                EventKind::Forcemerge,
                "expunge deletes".into(),
                cost.rewrite(live(Role::Primary)),
                || {
                    store.merge(true)?;
                    Ok(())
                },
            )?;
        }
        Injection::Cleansing { mode } => {
            let ids = env.selection(mode);
            impact.deleted_docs = ids.len();
            let sel = Selector::DocIds { doc_ids: ids };
            let cleanser = env.cleanser.clone();
            let mut receipts = Vec::new();
            inj.event(
                EventKind::MarkDelete,
                mode.as_str().into(),
                cost.maintenance(),
                || {
                    receipts = cleanser.begin(
                        vec![CleanseTarget {
                            request_id: None,
                            selector: sel.clone(),
                        }],
                        Duration::from_secs(3600),
                    )?;
                    Ok(())
                },
            )?;
            let rid = receipts[0].receipt_id.clone();
            loop {
                let r = cleanser.receipt_status(&rid)?;
                let Some(idx) = r.next_step() else { break };
                let (step, copy) = (r.steps[idx].step, r.steps[idx].copy);
                let d = match step {
                    Step::ExpungeSegments | Step::RewriteSnapshots => cost.rewrite(live(copy)),
                    _ => cost.maintenance(),
                };
                inj.event(
                    EventKind::CleansingStep,
                    format!("{step}/{}", copy.as_str()),
                    d,
                    || {
                        cleanser.run_next_step(&rid)?;
                        Ok(())
                    },
                )?;
            }
            impact.receipt_ids = vec![rid];
            impact.residue_clean = Some(cleanser.verify_absence(&sel)?.is_clean());
        }
    }
    let events = std::mem::take(&mut inj.events);
    let end = inj.t + timeline.after.as_nanos() as u64;
    sim.run_until(end)?;
    let secs = wall.elapsed().as_secs_f64();

    let series = sim.series(origin, end, false);
    let w_ms = env.window.as_millis() as u64;
    let ev_ms = ms(event_start - origin);
    let base: Vec<f64> = series
        .iter()
        .filter(|s| s.t_ms + w_ms <= ev_ms)
        .map(|s| s.ops_per_sec)
        .collect();
    impact.baseline_ops_per_sec = if base.is_empty() {
        0.0
    } else {
        base.iter().sum::<f64>() / base.len() as f64
    };
    let first = (ev_ms / w_ms.max(1)) as usize;
    let after = &series[first.min(series.len())..];
    if let Some((ti, trough)) = after.iter().enumerate().min_by(|a, b| {
        a.1.ops_per_sec
            .total_cmp(&b.1.ops_per_sec)
            .then(a.0.cmp(&b.0))
    }) {
        impact.trough_ops_per_sec = trough.ops_per_sec;
        impact.trough_ratio = if impact.baseline_ops_per_sec > 0.0 {
            trough.ops_per_sec / impact.baseline_ops_per_sec
        } else {
            0.0
        };
        impact.recovery_ms = after[ti..]
            .iter()
            .find(|s| s.ops_per_sec >= 0.9 * impact.baseline_ops_per_sec)
            .map(|s| (s.t_ms + w_ms).saturating_sub(ev_ms));
    }
    let post = sim
        .completions
        .iter()
        .filter(|&&c| c >= event_start && c < end)
        .count();
    let post_rate = post as f64 * 1e9 / (end - event_start) as f64;
    impact.post_event_mean_ratio = if impact.baseline_ops_per_sec > 0.0 {
        post_rate / impact.baseline_ops_per_sec
    } else {
        0.0
    };

    let ops = sim.completions.iter().filter(|&&c| c < end).count();
    let summary = Summary::from_series(
        ops,
        ms(end - origin),
        &series,
        if secs > 0.0 { ops as f64 / secs } else { 0.0 },
    );
    let mut rep = report(env, challenge, series, summary);
    rep.events = events;
    rep.impact = Some(impact);
    Ok(rep)
}

/// The cleansing-delete impact experiment with the default timeline.
pub fn cleansing_impact(
    env: &BenchEnv,
    challenge: &Challenge,
    mode: ImpactMode,
) -> Result<BenchReport> {
    run_impact(
        env,
        challenge,
        Injection::Cleansing { mode },
        Timeline::default(),
    )
}

/// Repeats a challenge on the same state; returns each report and the
/// coefficient of variation of their mean throughputs.
pub fn repeat_challenge(
    env: &BenchEnv,
    challenge: &Challenge,
    runs: usize,
) -> Result<(Vec<BenchReport>, f64)> {
    let reports: Vec<BenchReport> = (0..runs)
        .map(|_| run_challenge(env, challenge))
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = reports.iter().map(|r| r.summary.mean_ops_per_sec).collect();
    Ok((reports, coefficient_of_variation(&xs)))
}

pub fn coefficient_of_variation(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
    var.sqrt() / mean
}
