//! Command implementations behind `forgetctl`.

pub mod serve;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use forget_bench::{
    cleansing_impact, generate_track, run_challenge, run_impact, BenchEnv, BenchReport, Challenge,
    ChallengeName, ImpactMode, Injection, Timeline, TrackSpec,
};
use forget_core::clock::SystemClock;
use forget_core::config::SystemConfig;
use forget_core::engine::document::{read_jsonl, DocId};
use forget_core::engine::Selector;
use forget_core::lifecycle::Service;
use forget_core::precedent::{self, load_corpus, MatchResult};

/// `doc:<id>[,<id>...]`, `subject:<id>`, or a JSON selector object.
pub fn parse_selector(s: &str) -> Result<Selector> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).context("invalid JSON selector");
    }
    match s.split_once(':') {
        Some(("doc", ids)) if !ids.is_empty() => Ok(Selector::DocIds {
            doc_ids: ids.split(',').map(|i| DocId::new(i.trim())).collect(),
        }),
        Some(("subject", id)) if !id.is_empty() => Ok(Selector::subject(id)),
        _ => bail!("selector must be doc:<id>, subject:<id> or a JSON object, got `{s}`"),
    }
}

pub fn load_config(path: Option<&Path>) -> Result<SystemConfig> {
    match path {
        Some(p) => SystemConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SystemConfig::default()),
    }
}

pub fn open_service(data: &Path, config: Option<&Path>) -> Result<Arc<Service>> {
    let cfg = load_config(config)?;
    let svc = Service::open(data, cfg, Arc::new(SystemClock))
        .with_context(|| format!("opening {}", data.display()))?;
    Ok(Arc::new(svc))
}

pub fn ingest(svc: &Service, file: &Path, out: &mut impl Write) -> Result<usize> {
    let drafts = read_jsonl(BufReader::new(
        File::open(file).with_context(|| format!("opening {}", file.display()))?,
    ))?;
    let ids = svc.ingest_many(drafts)?;
    svc.store().flush()?;
    for id in &ids {
        writeln!(out, "{}", id.as_str())?;
    }
    Ok(ids.len())
}

/// Prints the residue report; returns whether it is clean.
pub fn verify(svc: &Service, selector: &Selector, out: &mut impl Write) -> Result<bool> {
    let report = svc.cleanser().verify_absence(selector)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(report.is_clean())
}

/// Prints findings; returns how many there were.
pub fn lint(config: &Path, json: bool, out: &mut impl Write) -> Result<usize> {
    let findings = precedent::lint_file(config)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&findings)?)?;
    } else if findings.is_empty() {
        writeln!(out, "{}: no anti-patterns found", config.display())?;
    } else {
        for f in &findings {
            writeln!(
                out,
                "AP{} {:?} {}: {}",
                f.id, f.severity, f.location, f.message
            )?;
        }
    }
    Ok(findings.len())
}

pub fn match_cases(cases: &Path, corpus: &Path, json: bool, out: &mut impl Write) -> Result<()> {
    let cases = load_corpus(cases)?;
    let corpus = load_corpus(corpus)?;
    let s = precedent::match_all(&cases, &corpus);
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&s)?)?;
        return Ok(());
    }
    for (id, r) in &s.results {
        match r {
            MatchResult::Strong { case_id, category } => {
                writeln!(out, "{id}\tstrong\t{}\t{case_id}", category.name())?
            }
            MatchResult::Weak { category } => writeln!(out, "{id}\tweak\t{}", category.name())?,
            MatchResult::NoMatch => writeln!(out, "{id}\tno-match")?,
        }
    }
    let pct = |n: usize| {
        if s.total() == 0 {
            0.0
        } else {
            100.0 * n as f64 / s.total() as f64
        }
    };
    writeln!(
        out,
        "strong {} ({:.0}%)  weak {} ({:.0}%)  no-match {} ({:.0}%)",
        s.strong,
        pct(s.strong),
        s.weak,
        pct(s.weak),
        s.no_match,
        pct(s.no_match)
    )?;
    Ok(())
}

pub fn summarize(
    corpus: &Path,
    json_out: Option<&Path>,
    svg_out: Option<&Path>,
    out: &mut impl Write,
) -> Result<()> {
    let s = precedent::summarize(&load_corpus(corpus)?);
    let mut rows: Vec<_> = s.category_counts.iter().filter(|(_, n)| **n > 0).collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    for (c, n) in rows {
        writeln!(out, "{:<14}{n:>4}  {}", c.name(), c.task().describe())?;
    }
    writeln!(out, "{:<14}{:>4}", "uncategorized", s.uncategorized)?;
    writeln!(out, "{:<14}{:>4}", "total", s.total_cases)?;
    for (t, pct) in &s.task_share_pct {
        writeln!(out, "{:.1}% {}", pct, t.describe())?;
    }
    if let Some(p) = json_out {
        std::fs::write(p, serde_json::to_string_pretty(&s)?)?;
    }
    if let Some(p) = svg_out {
        std::fs::write(p, precedent::render_svg(&s.treemap, 960, 600))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inject {
    CacheClear,
    Forcemerge,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub track_size: usize,
    pub seed: u64,
    pub challenge: ChallengeName,
    pub impact_mode: Option<ImpactMode>,
    pub inject: Option<Inject>,
    pub warmup: Option<usize>,
    pub measured: Option<usize>,
    pub out: PathBuf,
}

/// Runs one benchmark and writes a JSON report and an SVG plot into the
/// output directory.
pub fn bench(opts: &BenchOptions, out: &mut impl Write) -> Result<BenchReport> {
    let work = tempfile::tempdir()?;
    let track = generate_track(TrackSpec::new(opts.track_size, opts.seed));
    let env = BenchEnv::load(work.path(), &track)?;
    let mut c = Challenge::new(opts.challenge);
    if let Some(w) = opts.warmup {
        c.warmup = w;
    }
    if let Some(m) = opts.measured {
        c.measured = m;
    }
    let report = match (opts.impact_mode, opts.inject) {
        (Some(_), Some(_)) => bail!("--impact-mode and --inject are mutually exclusive"),
        (Some(mode), None) => cleansing_impact(&env, &c, mode)?,
        (None, Some(Inject::CacheClear)) => {
            run_impact(&env, &c, Injection::CacheClear, Timeline::default())?
        }
        (None, Some(Inject::Forcemerge)) => run_impact(
            &env,
            &c,
            Injection::ForcemergeFlush {
                docs: (opts.track_size / 100).max(1),
            },
            Timeline::default(),
        )?,
        (None, None) => run_challenge(&env, &c)?,
    };
    std::fs::create_dir_all(&opts.out)?;
    let stem = match (opts.impact_mode, opts.inject) {
        (Some(m), _) => format!("{}-{}", opts.challenge, m.as_str()),
        (None, Some(Inject::CacheClear)) => format!("{}-cache-clear", opts.challenge),
        (None, Some(Inject::Forcemerge)) => format!("{}-forcemerge", opts.challenge),
        (None, None) => opts.challenge.to_string(),
    };
    std::fs::write(opts.out.join(format!("{stem}.json")), report.to_json())?;
    std::fs::write(
        opts.out.join(format!("{stem}.svg")),
        report.render_svg(900, 420),
    )?;
    writeln!(
        out,
        "{}: {} docs, {} ops, {:.1} ops/s modeled (median window {:.1}, cv {:.3})",
        opts.challenge,
        opts.track_size,
        report.summary.ops,
        report.summary.mean_ops_per_sec,
        report.summary.median_window,
        report.summary.window_cv
    )?;
    if let Some(i) = &report.impact {
        writeln!(
            out,
            "baseline {:.1} ops/s, trough {:.0}% of baseline, recovery {}, post-event mean {:.0}%",
            i.baseline_ops_per_sec,
            100.0 * i.trough_ratio,
            i.recovery_ms
                .map_or("none".to_string(), |ms| format!("{ms} ms")),
            100.0 * i.post_event_mean_ratio
        )?;
        if let Some(clean) = i.residue_clean {
            writeln!(
                out,
                "deleted {} docs, residue {}",
                i.deleted_docs,
                if clean { "clean" } else { "FOUND" }
            )?;
        }
    }
    Ok(report)
}
