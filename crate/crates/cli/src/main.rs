//! `forgetctl`: operate a store, check configs and corpora, run benchmarks.

use std::io::stdout;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand, ValueEnum};
use forget_bench::{ChallengeName, ImpactMode};
use forget_core::config::CredentialLevel;
use forget_core::engine::document::SubjectId;
use forgetctl::{BenchOptions, Inject};

#[derive(Parser)]
#[command(
    name = "forgetctl",
    version,
    about = "Verifiable erasure for a replicated document store"
)]
struct Cli {
    /// Service data directory.
    #[arg(long, global = true, default_value = "forget-data")]
    data: PathBuf,
    /// Service configuration (TOML). Defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Serve the request API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Seconds between scheduler passes; 0 disables them.
        #[arg(long, default_value_t = 60)]
        tick_secs: u64,
    },
    /// Index documents from a JSON-lines file.
    Ingest { file: PathBuf },
    /// Register a data subject's credentials.
    Register {
        subject: String,
        #[arg(long, value_enum, default_value_t = Level::Email)]
        level: Level,
        #[arg(long)]
        secret: String,
    },
    /// Run one scheduler pass, forcing a cleansing batch.
    Process,
    /// Scan every surface for residue of the selected documents.
    /// Exits 1 when residue is found.
    Verify {
        /// doc:<id>[,<id>...], subject:<id>, or a JSON selector.
        selector: String,
    },
    /// Check a configuration for erasure anti-patterns. Exits 1 on findings.
    Lint {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Match new enforcement cases against a prior corpus.
    Match {
        cases: PathBuf,
        corpus: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Category counts and task shares of a corpus, with treemap export.
    Summarize {
        corpus: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a search benchmark, optionally with a cleansing delete or a
    /// maintenance injection.
    Bench {
        #[arg(long, default_value_t = 100_000)]
        track_size: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "high-low", value_parser = parse_challenge)]
        challenge: ChallengeName,
        #[arg(long, value_parser = parse_mode)]
        impact_mode: Option<ImpactMode>,
        #[arg(long, value_enum)]
        inject: Option<InjectArg>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        measured: Option<usize>,
        /// Directory for the JSON report and SVG plot.
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    None,
    Email,
    StrongId,
}

#[derive(Clone, Copy, ValueEnum)]
enum InjectArg {
    CacheClear,
    Forcemerge,
}

fn parse_challenge(s: &str) -> Result<ChallengeName> {
    ChallengeName::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ChallengeName::ALL.iter().map(|c| c.as_str()).collect();
        anyhow!(
            "unknown challenge `{s}`; expected one of {}",
            names.join(", ")
        )
    })
}

fn parse_mode(s: &str) -> Result<ImpactMode> {
    ImpactMode::parse(s)
        .ok_or_else(|| anyhow!("unknown impact mode `{s}`; expected single-doc or batch-1k"))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut out = stdout().lock();
    let service = || forgetctl::open_service(&cli.data, cli.config.as_deref());
    match cli.cmd {
        Cmd::Serve { addr, tick_secs } => {
            let svc = service()?;
            tokio::runtime::Runtime::new()?.block_on(forgetctl::serve::serve(
                svc,
                addr,
                Duration::from_secs(tick_secs),
            ))?;
        }
        Cmd::Ingest { file } => {
            let n = forgetctl::ingest(&*service()?, &file, &mut out)?;
            eprintln!("indexed {n} documents");
        }
        Cmd::Register {
            subject,
            level,
            secret,
        } => {
            let level = match level {
                Level::None => CredentialLevel::None,
                Level::Email => CredentialLevel::Email,
                Level::StrongId => CredentialLevel::StrongId,
            };
            service()?.register_subject(SubjectId::new(subject), level, &secret)?;
        }
        Cmd::Process => {
            let rep = service()?.process_now()?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
        }
        Cmd::Verify { selector } => {
            let sel = forgetctl::parse_selector(&selector)?;
            if !forgetctl::verify(&*service()?, &sel, &mut out)? {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Lint { config, json } => {
            if forgetctl::lint(&config, json, &mut out)? > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::Match {
            cases,
            corpus,
            json,
        } => forgetctl::match_cases(&cases, &corpus, json, &mut out)?,
        Cmd::Summarize { corpus, json, svg } => {
            forgetctl::summarize(&corpus, json.as_deref(), svg.as_deref(), &mut out)?
        }
        Cmd::Bench {
            track_size,
            seed,
            challenge,
            impact_mode,
            inject,
            warmup,
            measured,
            out: dir,
        } => {
            let opts = BenchOptions {
                track_size,
                seed,
                challenge,
                impact_mode,
                inject: inject.map(|i| match i {
                    InjectArg::CacheClear => Inject::CacheClear,
                    InjectArg::Forcemerge => Inject::Forcemerge,
                }),
                warmup,
                measured,
                out: dir,
            };
            forgetctl::bench(&opts, &mut out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
