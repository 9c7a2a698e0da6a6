use std::fs;
use std::io::{self, BufRead, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use stimstream_core::analysis::{
    build_retweet_network, composition_from_log, composition_from_plan, composition_table, engagement_report,
    engagement_report_for, engagement_table, network_table,
};
use stimstream_core::corpus::{ingest_background, parse_background_lines, CorpusManifest, IngestOptions};
use stimstream_core::eventlog::{read_log, EventKind, EventLogEntry};
use stimstream_core::fixtures::{desk_fixture, full_fixture};
use stimstream_core::scheduler::{compile_plan, load_msel, SchedulePlan, VolumePolicy};
use stimstream_core::template::{apply_rewrite_rules, expand_template, load_rewrite_rules, load_templates};
use stimstream_server::{ExerciseHost, Roster, ServerConfig, DEFAULT_BANNER};

#[derive(Parser)]
#[command(name = "stimstream", version, about = "Build, replay and analyze simulated crisis microblog streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a master schedule from a manifest, templates, events and background.
    Compile {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        msel: PathBuf,
        #[arg(long)]
        background: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Volume and ghost-retweet policy (JSON); defaults apply to missing fields.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the compile report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Replay a plan over HTTP until interrupted.
    Serve {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        roster: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        compression: f64,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Event log output (JSON lines).
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        paused: bool,
        #[arg(long)]
        banner: Option<String>,
        /// Exit once the plan and all ghost retweets have been emitted.
        #[arg(long)]
        exit_when_done: bool,
    },
    /// After-action reports over an event log.
    Analyze {
        #[command(subcommand)]
        report: Report,
    },
    /// Write a bundled fixture (manifest, templates, events, background, roster) to a directory.
    Fixture {
        #[arg(value_enum)]
        which: FixtureName,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print every variant of each template in a template file.
    Expand {
        #[arg(long)]
        templates: PathBuf,
    },
    /// Apply rewrite rules to each line of a text file (or stdin).
    Rewrite {
        #[arg(long)]
        rules: PathBuf,
        input: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Report {
    Network {
        #[arg(long)]
        log: PathBuf,
        /// Only retweets made by exercise participants.
        #[arg(long)]
        humans_only: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Write a `from<TAB>to<TAB>weight` edge list.
        #[arg(long)]
        edges: Option<PathBuf>,
    },
    Composition {
        #[arg(long, required_unless_present = "plan", conflicts_with = "plan")]
        log: Option<PathBuf>,
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Restrict a log to these entry kinds (repeatable).
        #[arg(long = "kind", value_enum)]
        kinds: Vec<Kind>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    Engagement {
        #[arg(long)]
        log: PathBuf,
        /// Entry kinds counted as activity; defaults to posted, retweeted and injected.
        #[arg(long = "kind", value_enum)]
        kinds: Vec<Kind>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Desk,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Emitted,
    Posted,
    Retweeted,
    Injected,
    GhostRetweet,
}

impl From<Kind> for EventKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Emitted => EventKind::Emitted,
            Kind::Posted => EventKind::Posted,
            Kind::Retweeted => EventKind::Retweeted,
            Kind::Injected => EventKind::Injected,
            Kind::GhostRetweet => EventKind::GhostRetweet,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_log(path: &Path) -> Result<Vec<EventLogEntry>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_log(io::BufReader::new(file)).with_context(|| format!("reading event log {}", path.display()))
}

fn emit<T: serde::Serialize>(format: Format, value: &T, table: impl FnOnce() -> String) -> Result<()> {
    let mut out = io::stdout().lock();
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(value)?)?,
        Format::Table => write!(out, "{}", table())?,
    }
    Ok(())
}

fn analyze(report: Report) -> Result<()> {
    match report {
        Report::Network { log, humans_only, format, edges } => {
            let r = build_retweet_network(&load_log(&log)?, humans_only);
            if let Some(p) = edges {
                write(&p, &r.to_tsv())?;
            }
            emit(format, &r, || network_table(&r))
        }
        Report::Composition { log, plan, kinds, format } => {
            let r = match (log, plan) {
                (_, Some(p)) => {
                    let plan = SchedulePlan::from_json(&read(&p)?).context("loading plan")?;
                    composition_from_plan(&plan)
                }
                (Some(l), None) => {
                    let kinds: Vec<EventKind> = kinds.into_iter().map(Into::into).collect();
                    composition_from_log(&load_log(&l)?, (!kinds.is_empty()).then_some(kinds.as_slice()))
                }
                (None, None) => bail!("either --log or --plan is required"),
            };
            emit(format, &r, || composition_table(&r))
        }
        Report::Engagement { log, kinds, format } => {
            let entries = load_log(&log)?;
            let r = if kinds.is_empty() {
                engagement_report(&entries)
            } else {
                let kinds: Vec<EventKind> = kinds.into_iter().map(Into::into).collect();
                engagement_report_for(&entries, &kinds)
            };
            emit(format, &r, || engagement_table(&r))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn compile(
    manifest: &Path,
    templates: &Path,
    msel: &Path,
    background: &Path,
    seed: u64,
    policy: Option<&Path>,
    out: &Path,
    report: Option<&Path>,
) -> Result<()> {
    let manifest = CorpusManifest::from_json(&read(manifest)?).context("loading manifest")?;
    let templates = load_templates(&read(templates)?).context("loading templates")?;
    let msel = load_msel(&read(msel)?).context("loading events")?;
    let parsed = parse_background_lines(&read(background)?);
    for r in &parsed.rejected {
        tracing::warn!("background line {}: {}", r.line, r.reason);
    }
    let messages = ingest_background(&parsed.records, &manifest.bbox, IngestOptions::default());
    let policy: VolumePolicy = match policy {
        Some(p) => serde_json::from_str(&read(p)?).context("loading policy")?,
        None => VolumePolicy::default(),
    };
    let (plan, rep) = compile_plan(&manifest, &templates, &msel, &messages, &policy, seed)?;
    write(out, &plan.to_json())?;
    if let Some(p) = report {
        write(p, &serde_json::to_string_pretty(&rep)?)?;
    }
    eprintln!(
        "{} messages ({} background, share {:.4}); {} background lines rejected, {} kept after region filter",
        rep.total,
        rep.background,
        rep.background_fraction,
        parsed.rejected.len(),
        messages.len()
    );
    for c in &rep.capped_bursts {
        eprintln!("burst {} / {} capped: {} of {} requested", c.event, c.template, c.scheduled, c.requested);
    }
    if !rep.unfilled_categories.is_empty() {
        eprintln!("categories without templates: {}", rep.unfilled_categories.join(", "));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
async fn serve(
    plan: &Path,
    roster: &Path,
    compression: f64,
    bind: SocketAddr,
    seed: u64,
    log: Option<PathBuf>,
    paused: bool,
    banner: Option<String>,
    exit_when_done: bool,
) -> Result<()> {
    let plan = SchedulePlan::from_json(&read(plan)?).context("loading plan")?;
    let roster = Roster::from_json(&read(roster)?).context("loading roster")?;
    let config = ServerConfig {
        compression,
        seed,
        start_paused: paused,
        log_path: log,
        banner: banner.unwrap_or_else(|| DEFAULT_BANNER.to_string()),
        bind,
    };
    let total = plan.messages.len();
    let running = ExerciseHost::new().start(plan, roster, config).await?;
    println!("listening on {}", running.url());
    io::stdout().flush()?;
    tracing::info!("replaying {total} messages at {compression}x");
    if exit_when_done {
        tokio::select! {
            _ = running.wait_idle() => {}
            _ = tokio::signal::ctrl_c() => {}
        }
    } else {
        tokio::signal::ctrl_c().await?;
    }
    running.shutdown().await;
    Ok(())
}

fn fixture(which: FixtureName, out: &Path) -> Result<()> {
    let (f, ghosts) = match which {
        FixtureName::Desk => (desk_fixture(), 12),
        FixtureName::Full => (full_fixture(), 40),
    };
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write(&out.join("manifest.json"), &serde_json::to_string_pretty(&f.manifest)?)?;
    write(&out.join("templates.jsonl"), f.templates_jsonl)?;
    write(&out.join("msel.jsonl"), f.msel_jsonl)?;
    write(&out.join("background.jsonl"), &f.background_jsonl())?;
    write(&out.join("roster.json"), &serde_json::to_string_pretty(&Roster::example(ghosts))?)?;
    Ok(())
}

fn expand(templates: &Path) -> Result<()> {
    let mut out = io::stdout().lock();
    for t in load_templates(&read(templates)?)? {
        for d in expand_template(&t).with_context(|| format!("template {}", t.id))? {
            writeln!(out, "{}\t{}", t.id, d.text)?;
        }
    }
    Ok(())
}

fn rewrite(rules: &Path, input: Option<&Path>) -> Result<()> {
    let rules = load_rewrite_rules(&read(rules)?)?;
    let reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(io::BufReader::new(fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(io::stdin().lock()),
    };
    let mut out = io::stdout().lock();
    for line in reader.lines() {
        writeln!(out, "{}", apply_rewrite_rules(&line?, &rules))?;
    }
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    match Cli::parse().command {
        Command::Compile { manifest, templates, msel, background, seed, policy, out, report } => {
            compile(&manifest, &templates, &msel, &background, seed, policy.as_deref(), &out, report.as_deref())
        }
        Command::Serve { plan, roster, compression, port, bind, seed, log, paused, banner, exit_when_done } => {
            serve(&plan, &roster, compression, SocketAddr::new(bind, port), seed, log, paused, banner, exit_when_done)
                .await
        }
        Command::Analyze { report } => analyze(report),
        Command::Fixture { which, out } => fixture(which, &out),
        Command::Expand { templates } => expand(&templates),
        Command::Rewrite { rules, input } => rewrite(&rules, input.as_deref()),
    }
}
