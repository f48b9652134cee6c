//! Acceptance run: one line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::time::Duration;

use forget_acceptance::{ensure, run, Verdict};
use forget_bench::{
    generate_track, run_impact, BenchEnv, Challenge, ChallengeName, Injection, Timeline, TrackSpec,
};
use forget_core::cleanse::{Cleanser, Surface};
use forget_core::clock::{days, Clock, SimClock, Timestamp};
use forget_core::config::{CredentialLevel, SystemConfig};
use forget_core::engine::document::{DocumentDraft, PiiTag, SubjectId};
use forget_core::engine::query::{Query, SearchRequest};
use forget_core::engine::{EngineConfig, Selector};
use forget_core::lifecycle::{
    Credentials, RequestFlag, RequestState, Service, SubmitRequest, WarningKind,
};
use forget_core::policy::{
    evaluate, validate_decision, Certainty, EvaluationContext, Exemption, ExemptionAssertion,
    Ground, GroundClaim, Outcome, PolicyRules, SubjectKind,
};
use forget_core::precedent::{self, load_corpus, Category};
use forget_core::subsystems::eventlog::LogLevel;
use forget_core::subsystems::replica::{ReplicationMode, Role, Store};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const TRIALS: u64 = 100;
const HOUR: Duration = Duration::from_secs(3600);

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

// ---------------------------------------------------------------- raw oracle

fn count(hay: &[u8], needle: &[u8]) -> usize {
    if needle.is_empty() || hay.len() < needle.len() {
        return 0;
    }
    hay.windows(needle.len()).filter(|w| *w == needle).count()
}

/// Occurrences of any needle in the files under `dir` and in the copy's
/// in-memory caches. Byte search only; shares no code with the scanner.
fn raw_hits(store: &Store, copy: Role, needles: &[String]) -> usize {
    let dir = store.root().join(copy.as_str());
    let mut n = 0;
    for e in walkdir::WalkDir::new(&dir)
        .into_iter()
        .filter_map(|e| e.ok())
    {
        if e.file_type().is_file() {
            let bytes = std::fs::read(e.path()).unwrap_or_default();
            let k = needles
                .iter()
                .map(|s| count(&bytes, s.as_bytes()))
                .sum::<usize>();
            n += k;
        }
    }
    for (_, dump) in store.engine(copy).cache_dumps() {
        let k = needles
            .iter()
            .map(|s| count(&dump, s.as_bytes()))
            .sum::<usize>();
        n += k;
    }
    n
}

// ------------------------------------------------- criteria 1 and 9: histories

#[derive(Debug, Clone, Copy)]
enum Op {
    IndexTarget,
    IndexOther,
    Flush,
    Merge(bool),
    Search,
    SearchReplica,
    Snapshot,
    DeleteOther,
    ClearCaches,
}

struct Trial {
    _dir: tempfile::TempDir,
    cleanser: Cleanser,
    selector: Selector,
    needles: Vec<String>,
}

fn other_doc(rng: &mut StdRng, i: usize) -> DocumentDraft {
    DocumentDraft::new()
        .field("body", format!("common filler {:08x}", rng.gen::<u32>()))
        .personal(
            "email",
            format!("other{i:04}@example.net"),
            PiiTag::new(format!("other-{i:04}"), "contact"),
        )
}

/// Builds a store and replays the history generated from `seed`; the same
/// seed always yields the same store contents.
fn replay(seed: u64) -> Trial {
    let mut rng = StdRng::seed_from_u64(seed);
    let dir = tempfile::tempdir().unwrap();
    let clock = SimClock::new(Timestamp(1_000)).shared();
    let cfg = EngineConfig {
        log_level: LogLevel::Trace,
        seal_threshold: rng.gen_range(2..20),
        ..Default::default()
    };
    let store = Arc::new(
        Store::open(
            dir.path().join("store"),
            cfg,
            ReplicationMode::Strict,
            clock.clone(),
        )
        .unwrap(),
    );
    let cleanser = Cleanser::open(&dir.path().join("control"), store, clock).unwrap();

    let sentinel = format!("snt{:016x}", rng.gen::<u64>());
    let subject = format!("target-{seed:04}");
    let email = format!("{subject}.{}@example.org", &sentinel[3..9]);
    let mut others = Vec::new();
    let mut n = 0;
    for _ in 0..rng.gen_range(0..8) {
        others.push(cleanser.index(other_doc(&mut rng, n)).unwrap());
        n += 1;
    }
    let target_doc = DocumentDraft::new()
        .field("body", format!("common record {sentinel}"))
        .personal(
            "email",
            email.clone(),
            PiiTag::new(subject.clone(), "contact"),
        );
    // Some histories index the target last so it is still unflushed.
    let late = rng.gen_bool(0.3);
    let mut target = None;
    if !late {
        target = Some(cleanser.index(target_doc.clone()).unwrap());
    }

    let pool = [
        Op::IndexOther,
        Op::IndexOther,
        Op::Flush,
        Op::Merge(false),
        Op::Merge(true),
        Op::Search,
        Op::SearchReplica,
        Op::Snapshot,
        Op::DeleteOther,
        Op::ClearCaches,
    ];
    let mut ops: Vec<Op> = (0..rng.gen_range(4..20))
        .map(|_| *pool.choose(&mut rng).unwrap())
        .collect();
    let mut required = vec![Op::Flush, Op::Snapshot];
    required.shuffle(&mut rng);
    ops.extend(required);
    if late {
        ops.push(Op::IndexTarget);
    }
    let mut tail = vec![Op::Search, Op::SearchReplica];
    tail.shuffle(&mut rng);
    ops.extend(tail);

    let store = cleanser.store().clone();
    let query = SearchRequest::new(Query::term("common"));
    for op in ops {
        match op {
            Op::IndexTarget => {
                target = Some(cleanser.index(target_doc.clone()).unwrap());
            }
            Op::IndexOther => {
                others.push(cleanser.index(other_doc(&mut rng, n)).unwrap());
                n += 1;
            }
            Op::Flush => {
                store.flush().unwrap();
            }
            Op::Merge(expunge) => {
                store.merge(expunge).unwrap();
            }
            Op::Search => {
                store.search(&query).unwrap();
            }
            Op::SearchReplica => {
                store.search_replica(&query).unwrap();
            }
            Op::Snapshot => {
                store.snapshot_create().unwrap();
            }
            Op::DeleteOther if !others.is_empty() => {
                let id = others.swap_remove(rng.gen_range(0..others.len()));
                store.mark_delete(&Selector::doc(id.as_str())).unwrap();
            }
            Op::DeleteOther => {}
            Op::ClearCaches => {
                store.clear_caches().unwrap();
            }
        }
    }
    let target = target.unwrap();
    let selector = if rng.gen_bool(0.5) {
        Selector::doc(target.as_str())
    } else {
        Selector::subject(subject)
    };
    Trial {
        _dir: dir,
        cleanser,
        selector,
        needles: vec![sentinel, email],
    }
}

#[derive(Default)]
struct ThoroughnessRun {
    cleansed_clean: usize,
    marked_with_residue: usize,
    failures: Vec<String>,
    coverage: BTreeMap<(Role, Surface), usize>,
    replica_residue_before: usize,
    replica_clean_after: usize,
}

fn thoroughness_suite() -> ThoroughnessRun {
    let mut out = ThoroughnessRun::default();
    for seed in 0..TRIALS {
        let t = replay(seed);
        let before = t.cleanser.verify_absence(&t.selector).unwrap();
        for s in before.surfaces() {
            *out.coverage.entry(s).or_default() += 1;
        }
        let replica_before = raw_hits(t.cleanser.store(), Role::Replica, &t.needles);
        if replica_before > 0 && !before.on(Role::Replica).is_empty() {
            out.replica_residue_before += 1;
        }
        let receipt = t.cleanser.cleansing_delete(&t.selector, HOUR).unwrap();
        let after = t.cleanser.verify_absence(&t.selector).unwrap();
        let raw_primary = raw_hits(t.cleanser.store(), Role::Primary, &t.needles);
        let raw_replica = raw_hits(t.cleanser.store(), Role::Replica, &t.needles);
        if receipt.all_done() && after.is_clean() && raw_primary + raw_replica == 0 {
            out.cleansed_clean += 1;
        } else {
            out.failures.push(format!(
                "seed {seed}: cleanse left {} matches, raw {raw_primary}/{raw_replica}",
                after.matches.len()
            ));
        }
        if after.on(Role::Replica).is_empty() && raw_replica == 0 {
            out.replica_clean_after += 1;
        }

        let m = replay(seed);
        m.cleanser.store().mark_delete(&m.selector).unwrap();
        let rep = m.cleanser.verify_absence(&m.selector).unwrap();
        let raw = raw_hits(m.cleanser.store(), Role::Primary, &m.needles)
            + raw_hits(m.cleanser.store(), Role::Replica, &m.needles);
        if !rep.is_clean() && raw > 0 {
            out.marked_with_residue += 1;
        } else {
            out.failures.push(format!(
                "seed {seed}: mark_delete residue reported {} raw {raw}",
                rep.matches.len()
            ));
        }
    }
    out
}

fn criterion_1(r: &ThoroughnessRun) -> Result<String, String> {
    let all: Vec<(Role, Surface)> = Role::BOTH
        .iter()
        .flat_map(|c| Surface::ALL.iter().map(move |s| (*c, *s)))
        .collect();
    let missing: Vec<String> = all
        .iter()
        .filter(|k| !r.coverage.contains_key(k))
        .map(|(c, s)| format!("{}/{s:?}", c.as_str()))
        .collect();
    ensure(missing.is_empty(), || {
        format!("histories never reached {}", missing.join(", "))
    })?;
    ensure(
        r.cleansed_clean == TRIALS as usize && r.marked_with_residue == TRIALS as usize,
        || {
            format!(
                "cleansed clean {}/{TRIALS}, mark-delete residue {}/{TRIALS}; {}",
                r.cleansed_clean,
                r.marked_with_residue,
                r.failures
                    .iter()
                    .take(3)
                    .cloned()
                    .collect::<Vec<_>>()
                    .join("; ")
            )
        },
    )?;
    let min_cov = r.coverage.values().min().copied().unwrap_or(0);
    Ok(format!(
        "cleansing_delete clean {}/{TRIALS}; mark_delete left residue {}/{TRIALS}; every copy/surface reached (min {min_cov} trials)",
        r.cleansed_clean, r.marked_with_residue
    ))
}

fn criterion_9(r: &ThoroughnessRun) -> Result<String, String> {
    ensure(r.replica_residue_before == TRIALS as usize, || {
        format!(
            "replica held the target before cleansing in only {}/{TRIALS} trials",
            r.replica_residue_before
        )
    })?;
    ensure(r.replica_clean_after == TRIALS as usize, || {
        format!(
            "replica surfaces clean after cleansing in {}/{TRIALS} trials",
            r.replica_clean_after
        )
    })?;
    Ok(format!(
        "replica surfaces empty after cleansing in {}/{TRIALS} trials",
        r.replica_clean_after
    ))
}

// ------------------------------------------------------------ criterion 2 and 3

fn criterion_2() -> Result<String, String> {
    let y6 = load_corpus(&fixtures().join("precedent/enforcement_y6.jsonl"))
        .map_err(|e| e.to_string())?;
    let corpus = load_corpus(&fixtures().join("precedent/enforcement_5y.jsonl"))
        .map_err(|e| e.to_string())?;
    let s = precedent::match_all(&y6, &corpus);
    ensure((s.strong, s.weak, s.no_match) == (32, 8, 0), || {
        format!(
            "got {} strong / {} weak / {} no-match",
            s.strong, s.weak, s.no_match
        )
    })?;
    Ok(format!(
        "{} strong / {} weak / {} no-match over {} cases",
        s.strong,
        s.weak,
        s.no_match,
        s.total()
    ))
}

fn criterion_3() -> Result<String, String> {
    let corpus = load_corpus(&fixtures().join("precedent/enforcement_5y.jsonl"))
        .map_err(|e| e.to_string())?;
    let s = precedent::summarize(&corpus);
    let expected: [(&str, usize); 15] = [
        ("NO-RESPONSE", 54),
        ("EXMPT-GDPR", 41),
        ("LATE-RESPONSE", 25),
        ("EXMPT-OTH", 24),
        ("OMIT", 17),
        ("NO_API", 15),
        ("EXMPT-ALL", 13),
        ("UI-TROUBLE", 8),
        ("VERIFY-MORE", 8),
        ("EXPLAIN", 8),
        ("PROPAGATE", 5),
        ("BAD_SERV", 5),
        ("DBMS", 3),
        ("DEFLECT", 3),
        ("NO-SRC", 2),
    ];
    let mut wrong = Vec::new();
    for (name, want) in expected {
        let c = Category::parse(name).ok_or_else(|| format!("unknown category {name}"))?;
        if s.count(c) != want {
            wrong.push(format!("{name} {} != {want}", s.count(c)));
        }
    }
    if s.uncategorized != 5 {
        wrong.push(format!("uncategorized {} != 5", s.uncategorized));
    }
    if s.total_cases != 205 {
        wrong.push(format!("total {} != 205", s.total_cases));
    }
    ensure(wrong.is_empty(), || wrong.join(", "))?;
    Ok(format!(
        "15 category counts, 5 uncategorized, {} cases exact",
        s.total_cases
    ))
}

// ------------------------------------------------------------------ criterion 4

fn criterion_4() -> Result<String, String> {
    let rules = PolicyRules::builtin();
    let purposes = ["account".to_string()].into_iter().collect();
    let now = Timestamp(86_400_000);
    let (mut total, mut rejects, mut ambiguous_only) = (0usize, 0usize, 0usize);
    let mut problems = Vec::new();
    for subject_kind in [SubjectKind::NaturalPerson, SubjectKind::Organization] {
        // Each ground is absent, claimed and established, or claimed and unproven.
        for gcode in 0..3u32.pow(Ground::ALL.len() as u32) {
            let mut grounds = Vec::new();
            let mut c = gcode;
            for g in Ground::ALL {
                match c % 3 {
                    1 => grounds.push(GroundClaim::holds(g)),
                    2 => grounds.push(GroundClaim::unproven(g)),
                    _ => {}
                }
                c /= 3;
            }
            // Each exemption is absent, asserted as clear, or asserted as ambiguous.
            for ecode in 0..3u32.pow(Exemption::ALL.len() as u32) {
                let mut asserted = Vec::new();
                let mut c = ecode;
                for e in Exemption::ALL {
                    let certainty = match c % 3 {
                        1 => Some(Certainty::Clear),
                        2 => Some(Certainty::Ambiguous),
                        _ => None,
                    };
                    if let Some(certainty) = certainty {
                        asserted.push(ExemptionAssertion {
                            exemption: e,
                            certainty,
                            asserted_by: "controller".into(),
                            reason: "asserted".into(),
                        });
                    }
                    c /= 3;
                }
                let ctx = EvaluationContext {
                    subject_kind,
                    grounds: grounds.clone(),
                    asserted,
                    purposes: Clone::clone(&purposes),
                };
                let d = evaluate(&ctx, &rules, now);
                total += 1;
                if let Outcome::Reject { explanation, cited } = &d.outcome {
                    rejects += 1;
                    if explanation.trim().is_empty()
                        || cited.is_empty()
                        || !validate_decision(&d).is_empty()
                    {
                        problems.push(format!("unexplained reject for {ctx:?}"));
                    }
                }
                let only_ambiguous = !d.considered.is_empty()
                    && d.considered
                        .iter()
                        .all(|a| a.certainty == Certainty::Ambiguous);
                let eligible = subject_kind == SubjectKind::NaturalPerson
                    && grounds.iter().any(|g| g.established);
                if only_ambiguous && eligible {
                    ambiguous_only += 1;
                    if d.outcome.is_reject() {
                        problems.push(format!("auto-reject on ambiguous exemptions for {ctx:?}"));
                    }
                }
            }
        }
    }
    ensure(problems.is_empty(), || {
        format!("{} problems, first: {}", problems.len(), problems[0])
    })?;
    Ok(format!(
        "{total} combinations decided; {rejects} rejects all explained; 0 auto-rejects across {ambiguous_only} ambiguous-only cases"
    ))
}

// ------------------------------------------------------- service fixtures (5, 6)

struct Svc {
    _dir: tempfile::TempDir,
    clock: SimClock,
    svc: Service,
}

fn service(extra: &str) -> Svc {
    let dir = tempfile::tempdir().unwrap();
    let clock = SimClock::new(Timestamp(1_000));
    let svc = Service::open(
        dir.path(),
        SystemConfig::parse(extra).unwrap(),
        clock.shared(),
    )
    .unwrap();
    Svc {
        _dir: dir,
        clock,
        svc,
    }
}

fn enroll(s: &Svc, subject: &str, docs: usize, rng: &mut StdRng) {
    s.svc
        .register_subject(
            SubjectId::new(subject),
            CredentialLevel::Email,
            &format!("pw-{subject}"),
        )
        .unwrap();
    for _ in 0..docs {
        s.svc
            .ingest(
                DocumentDraft::new()
                    .field("body", format!("entry {:016x}", rng.gen::<u64>()))
                    .personal(
                        "email",
                        format!("{subject}@example.org"),
                        PiiTag::new(subject, "support"),
                    ),
            )
            .unwrap();
    }
}

fn submit(s: &Svc, subject: &str) -> String {
    s.svc
        .submit(SubmitRequest {
            subject_id: SubjectId::new(subject),
            selector: None,
            grounds: vec![GroundClaim::holds(Ground::ConsentWithdrawn)],
            credentials: Credentials {
                level: CredentialLevel::Email,
                secret: format!("pw-{subject}"),
            },
            subject_kind: Default::default(),
        })
        .unwrap()
}

fn criterion_5() -> Result<String, String> {
    let s = service("[deadlines]\nauto_ack = false");
    let mut rng = StdRng::seed_from_u64(5);
    for subj in ["on-time", "late", "never"] {
        enroll(&s, subj, 1, &mut rng);
    }
    let start = s.clock.now();
    let on_time = submit(&s, "on-time");
    let late = submit(&s, "late");
    let never = submit(&s, "never");
    let kind = |id: &str| {
        s.svc
            .violations()
            .into_iter()
            .find(|w| w.request_id == id)
            .map(|w| w.kind)
    };

    s.clock.set(start.plus(days(29)));
    s.svc
        .acknowledge(&on_time)
        .map_err(|e| format!("day-29 acknowledgment failed: {e}"))?;
    ensure(kind(&on_time).is_none(), || {
        format!("day 29 flagged {:?}", kind(&on_time))
    })?;
    ensure(kind(&never).is_none(), || {
        format!("pending at day 29 already flagged {:?}", kind(&never))
    })?;

    s.clock.set(start.plus(days(31)));
    s.svc
        .acknowledge(&late)
        .map_err(|e| format!("day-31 acknowledgment failed: {e}"))?;
    ensure(kind(&late) == Some(WarningKind::LateResponse), || {
        format!("day 31 gave {:?}", kind(&late))
    })?;
    ensure(kind(&never) == Some(WarningKind::NoResponse), || {
        format!("never gave {:?} at day 31", kind(&never))
    })?;
    s.clock.set(start.plus(days(90)));
    ensure(kind(&never) == Some(WarningKind::NoResponse), || {
        format!("never gave {:?} at day 90", kind(&never))
    })?;
    ensure(kind(&on_time).is_none(), || {
        "on-time request flagged later".into()
    })?;
    Ok("day 29 ok, day 31 late-response, never acknowledged no-response from day 31".into())
}

fn criterion_6() -> Result<String, String> {
    let mut blocked = 0;
    let mut clean_completions = 0;
    for trial in 0..TRIALS {
        let mut rng = StdRng::seed_from_u64(600 + trial);
        let docs = rng.gen_range(1..5);

        let s = service("");
        enroll(&s, "subj", docs, &mut rng);
        if rng.gen_bool(0.5) {
            s.svc.store().flush().unwrap();
        }
        s.svc.store().snapshot_create().unwrap();
        s.svc
            .store()
            .primary()
            .faults
            .leave_stray_snapshot
            .store(true, Ordering::SeqCst);
        let id = submit(&s, "subj");
        let tick = s.svc.process_now().unwrap();
        let direct = s.svc.complete(&id);
        let r = s.svc.get(&id).unwrap();
        if tick.residue_blocked == 1
            && tick.completed == 0
            && direct.is_err()
            && r.state == RequestState::Executing
            && r.has_flag(RequestFlag::ResidueDetected)
            && r.receipt_id.is_none()
        {
            blocked += 1;
        }

        let s = service("");
        enroll(&s, "subj", docs, &mut rng);
        s.svc.store().snapshot_create().unwrap();
        let id = submit(&s, "subj");
        s.svc.process_now().unwrap();
        let r = s.svc.get(&id).unwrap();
        if r.state == RequestState::Completed
            && r.completion_residue.as_ref().is_some_and(|c| c.is_clean())
        {
            clean_completions += 1;
        }
    }
    ensure(blocked == TRIALS as usize, || {
        format!("fault blocked completion in {blocked}/{TRIALS} trials")
    })?;
    ensure(clean_completions == TRIALS as usize, || {
        format!("clean completion with empty residue report in {clean_completions}/{TRIALS} trials")
    })?;
    Ok(format!(
        "stray snapshot blocked completion {blocked}/{TRIALS}; fault-free completions carried empty residue {clean_completions}/{TRIALS}"
    ))
}

// ------------------------------------------------------------------ criterion 7

fn criterion_7() -> Result<String, String> {
    let lint = |name: &str| {
        precedent::lint_file(&fixtures().join("lint").join(name)).map_err(|e| e.to_string())
    };
    let clean = lint("clean.toml")?;
    ensure(clean.is_empty(), || {
        format!("clean config produced {clean:?}")
    })?;
    for n in 1..=6u8 {
        let ids: Vec<u8> = lint(&format!("ap{n}.toml"))?.iter().map(|f| f.id).collect();
        ensure(ids == vec![n], || format!("ap{n}.toml produced {ids:?}"))?;
    }
    Ok(
        "clean config: 0 findings; each single-fault config triggers exactly its own anti-pattern"
            .into(),
    )
}

// ------------------------------------------------------------------ criterion 8

fn criterion_8() -> Result<String, String> {
    let size = 100_000;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let env = BenchEnv::load(dir.path(), &generate_track(TrackSpec::new(size, 42)))
        .map_err(|e| e.to_string())?;
    let c = Challenge::new(ChallengeName::HighLow);

    let clear = run_impact(&env, &c, Injection::CacheClear, Timeline::default())
        .map_err(|e| e.to_string())?;
    let ci = clear.impact.ok_or("no impact summary")?;
    ensure(ci.trough_ratio <= 0.8, || {
        format!(
            "cache-clear trough only {:.0}% below baseline",
            100.0 * (1.0 - ci.trough_ratio)
        )
    })?;
    let rec = ci
        .recovery_ms
        .ok_or("throughput never recovered to within 10% of baseline")?;
    ensure(rec <= 10_000, || format!("recovery took {rec} ms"))?;

    let docs = size / 100;
    let fm = run_impact(
        &env,
        &c,
        Injection::ForcemergeFlush { docs },
        Timeline::default(),
    )
    .map_err(|e| e.to_string())?;
    let fi = fm.impact.ok_or("no impact summary")?;
    ensure(fi.deleted_docs > 0 && fi.deleted_docs <= docs, || {
        format!("deleted {} docs", fi.deleted_docs)
    })?;
    ensure(fi.post_event_mean_ratio >= 0.8, || {
        format!(
            "post-event mean {:.0}% of baseline",
            100.0 * fi.post_event_mean_ratio
        )
    })?;
    Ok(format!(
        "cache clear: trough {:.0}% below baseline, recovered in {:.2}s; forcemerge+flush of {} docs ({:.1}%): post-event mean {:.0}% of baseline",
        100.0 * (1.0 - ci.trough_ratio),
        rec as f64 / 1000.0,
        fi.deleted_docs,
        100.0 * fi.deleted_docs as f64 / size as f64,
        100.0 * fi.post_event_mean_ratio
    ))
}

fn main() -> ExitCode {
    let mut verdicts: Vec<Verdict> = Vec::new();
    let mut suite = None;
    let v1 = run(1, "thoroughness", Some(Duration::from_secs(120)), || {
        let r = thoroughness_suite();
        let out = criterion_1(&r);
        suite = Some(r);
        out
    });
    println!("{}", v1.line());
    verdicts.push(v1);
    let checks: [(
        u8,
        &'static str,
        Option<Duration>,
        fn() -> Result<String, String>,
    ); 7] = [
        (
            2,
            "year-6 matching",
            Some(Duration::from_secs(1)),
            criterion_2,
        ),
        (3, "category summary", None, criterion_3),
        (
            4,
            "policy totality",
            Some(Duration::from_secs(10)),
            criterion_4,
        ),
        (5, "deadline clock", None, criterion_5),
        (6, "honest completion", None, criterion_6),
        (7, "linter", None, criterion_7),
        (
            8,
            "bench shape",
            Some(Duration::from_secs(300)),
            criterion_8,
        ),
    ];
    for (id, name, limit, f) in checks {
        let v = run(id, name, limit, f);
        println!("{}", v.line());
        verdicts.push(v);
    }
    let v9 = run(9, "replication", None, || match &suite {
        Some(r) => criterion_9(r),
        None => Err("thoroughness suite did not complete".into()),
    });
    println!("{}", v9.line());
    verdicts.push(v9);

    let failed = verdicts.iter().filter(|v| !v.passed).count();
    println!(
        "{} of {} criteria passed",
        verdicts.len() - failed,
        verdicts.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
