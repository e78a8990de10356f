use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ddtriage_core::ctph::{self, CtphDigest, DigestEntry, KnownSample};
use ddtriage_core::report::{self, ReportFormat, ReportInput};
use ddtriage_core::store::CorpusStore;
use ddtriage_core::vt::{self, FamilyClassifier, HttpTransport, VtClient, VtError};
use ddtriage_core::{Lexicon, ScoringConfig, UnavailablePolicy};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ddtriage", version, about = "Static DDoS-capability triage for ELF binaries")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Corpus directory.
    #[arg(long, global = true, env = "DDTRIAGE_CORPUS", default_value = "corpus")]
    corpus: PathBuf,
    /// Suspicious-word lexicon, `word<TAB>coefficient` per line.
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    /// Scoring configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured treatment of unavailable rules.
    #[arg(long, global = true, value_parser = parse_policy)]
    unavailable: Option<UnavailablePolicy>,
    /// Minimum similarity persisted.
    #[arg(long, global = true, default_value_t = ctph::DEFAULT_RECORD_THRESHOLD,
          value_parser = clap::value_parser!(u8).range(20..=100))]
    record_threshold: u8,
    /// Minimum similarity reported as a family match.
    #[arg(long, global = true, default_value_t = ctph::DEFAULT_FLAG_THRESHOLD,
          value_parser = clap::value_parser!(u8).range(70..=100))]
    flag_threshold: u8,
    /// GDS operating point.
    #[arg(long, global = true, default_value_t = ddtriage_core::DEFAULT_DETECT_GDS, value_parser = parse_gds)]
    detect_gds: f64,
    /// Vendor whose verdict labels families.
    #[arg(long, global = true, default_value = vt::DEFAULT_VENDOR)]
    vendor: String,
    /// Worker threads (default: all cores).
    #[arg(short = 'j', long, global = true)]
    jobs: Option<usize>,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Copy binaries (files or directories) into the corpus.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Score samples lacking a current analysis.
    Analyze {
        /// Re-analyze every sample.
        #[arg(long)]
        force: bool,
    },
    /// Compare two files or digests, or all corpus pairs when none are given.
    Compare {
        #[arg(num_args = 0..=2)]
        items: Vec<String>,
    },
    /// Match unlabelled samples against family-labelled ones.
    Match,
    /// Corpus report.
    Report {
        #[arg(long, default_value = "markdown", value_parser = parse_format)]
        format: ReportFormat,
        /// Analyzed benign corpus for false-positive columns.
        #[arg(long)]
        benign: Option<PathBuf>,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Label samples from the reputation service (key in VT_API_KEY).
    Vt {
        /// Also revisit samples that already carry a label.
        #[arg(long)]
        refresh: bool,
        /// Stop after this many samples.
        #[arg(long)]
        limit: Option<usize>,
        /// Minimum seconds between requests.
        #[arg(long, default_value_t = 15)]
        min_interval: u64,
        #[arg(long, default_value = vt::DEFAULT_ENDPOINT)]
        endpoint: String,
    },
}

fn parse_policy(s: &str) -> Result<UnavailablePolicy, String> {
    match s {
        "exclude" => Ok(UnavailablePolicy::Exclude),
        "include-as-zero" => Ok(UnavailablePolicy::IncludeAsZero),
        _ => Err("expected exclude or include-as-zero".into()),
    }
}

fn parse_gds(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err("must be in (0, 1]".into())
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

/// Reputation lookups that could not run for lack of an API key.
#[derive(Debug)]
struct MissingKey(usize);

impl fmt::Display for MissingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} sample(s) not in the cache and {} is not set", self.0, vt::API_KEY_ENV)
    }
}

impl std::error::Error for MissingKey {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingKey>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    if let Some(n) = g.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("configuring worker pool")?;
    }
    match &cli.command {
        Command::Ingest { paths } => cmd_ingest(g, paths),
        Command::Analyze { force } => cmd_analyze(g, *force),
        Command::Compare { items } => cmd_compare(g, items),
        Command::Match => cmd_match(g),
        Command::Report { format, benign, output } => cmd_report(g, *format, benign.as_deref(), output.as_deref()),
        Command::Vt { refresh, limit, min_interval, endpoint } => cmd_vt(g, *refresh, *limit, *min_interval, endpoint),
    }
}

fn open_store(g: &Global) -> Result<CorpusStore> {
    CorpusStore::open(&g.corpus).with_context(|| format!("opening corpus {}", g.corpus.display()))
}

fn load_lexicon(g: &Global) -> Result<Lexicon> {
    match &g.lexicon {
        None => Ok(Lexicon::builtin()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Lexicon::parse(&text).with_context(|| format!("parsing lexicon {}", p.display()))
        }
    }
}

fn load_config(g: &Global) -> Result<ScoringConfig> {
    let mut cfg = match &g.config {
        None => ScoringConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ScoringConfig::from_toml(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
    };
    if let Some(policy) = g.unavailable {
        cfg = cfg.with_policy(policy);
    }
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn cmd_ingest(g: &Global, paths: &[PathBuf]) -> Result<()> {
    let mut store = open_store(g)?;
    let mut total = ddtriage_core::store::IngestSummary::default();
    for p in paths {
        if p.is_dir() {
            let s = store.ingest_dir(p).with_context(|| format!("ingesting {}", p.display()))?;
            total.new += s.new;
            total.duplicate += s.duplicate;
            total.malformed += s.malformed;
            total.companions += s.companions;
            total.unmatched_companions += s.unmatched_companions;
            total.new_ids.extend(s.new_ids);
        } else {
            match store.ingest(p).with_context(|| format!("ingesting {}", p.display()))? {
                ddtriage_core::store::IngestOutcome::New(id) => {
                    total.new += 1;
                    if store.get(&id).is_some_and(|r| r.profile.malformed) {
                        total.malformed += 1;
                    }
                    total.new_ids.push(id);
                }
                ddtriage_core::store::IngestOutcome::Duplicate(_) => total.duplicate += 1,
            }
        }
    }
    if g.json {
        return print_json(&serde_json::to_value(&total)?);
    }
    println!(
        "ingested {} new, {} duplicate, {} not ELF; {} companion file(s) attached, {} unmatched; corpus holds {}",
        total.new,
        total.duplicate,
        total.malformed,
        total.companions,
        total.unmatched_companions,
        store.len()
    );
    Ok(())
}

fn cmd_analyze(g: &Global, force: bool) -> Result<()> {
    let lexicon = load_lexicon(g)?;
    let config = load_config(g)?;
    let mut store = open_store(g)?;
    let summary = store.analyze(&lexicon, &config, force)?;
    let flagged: Vec<(String, f64)> = store
        .records()
        .iter()
        .filter_map(|r| r.gds().filter(|&s| s >= g.detect_gds).map(|s| (r.sha1.clone(), s)))
        .collect();
    if g.json {
        return print_json(&json!({
            "summary": summary,
            "detect_gds": g.detect_gds,
            "flagged": flagged.iter().map(|(id, s)| json!({"sha1": id, "gds": s})).collect::<Vec<_>>(),
        }));
    }
    println!("analyzed {}, skipped {} up to date, {} failed", summary.analyzed, summary.skipped, summary.failed.len());
    for (id, err) in &summary.failed {
        eprintln!("  {id}: {err}");
    }
    let avail: Vec<String> =
        summary.rule_availability.iter().enumerate().map(|(i, n)| format!("R{}={n}", i + 1)).collect();
    println!("rule availability: {}", avail.join(" "));
    println!("{} sample(s) at or above GDS {}", flagged.len(), g.detect_gds);
    for (id, s) in flagged {
        println!("  {id}  {s:.2}");
    }
    Ok(())
}

fn digest_of(item: &str) -> Result<CtphDigest> {
    let path = Path::new(item);
    if path.is_file() {
        let data = fs::read(path).with_context(|| format!("reading {item}"))?;
        return ctph::digest(&data).with_context(|| format!("hashing {item}"));
    }
    item.parse().with_context(|| format!("{item} is neither a file nor a digest"))
}

fn cmd_compare(g: &Global, items: &[String]) -> Result<()> {
    match items {
        [a, b] => {
            let (da, db) = (digest_of(a)?, digest_of(b)?);
            let score = ctph::compare(&da, &db)?;
            if g.json {
                return print_json(&json!({"a": da, "b": db, "score": score}));
            }
            println!("{da}\n{db}\n{score}");
            Ok(())
        }
        [] => {
            let store = open_store(g)?;
            let entries = store.digest_entries();
            let pairs = ctph::all_pairs(&entries, g.record_threshold);
            let written = store.write_similarity(&pairs, g.record_threshold)?;
            if g.json {
                return print_json(
                    &json!({"samples": entries.len(), "records": written, "threshold": g.record_threshold}),
                );
            }
            println!(
                "{} sample(s) compared; {written} similarity record(s) at or above {} written",
                entries.len(),
                g.record_threshold
            );
            Ok(())
        }
        _ => bail!("compare takes zero or two arguments"),
    }
}

fn known_and_unknown(store: &CorpusStore) -> (Vec<KnownSample>, Vec<DigestEntry>) {
    let mut known = Vec::new();
    let mut unknown = Vec::new();
    for r in store.records().iter().filter(|r| r.analysis.is_some()) {
        match r.family.as_ref().filter(|f| f.is_known_family()) {
            Some(f) => {
                known.push(KnownSample { id: r.sha1.clone(), family: f.as_str().to_string(), digests: r.digests() })
            }
            None => unknown.push(DigestEntry { id: r.sha1.clone(), digests: r.digests() }),
        }
    }
    (known, unknown)
}

fn cmd_match(g: &Global) -> Result<()> {
    let store = open_store(g)?;
    let (known, unknown) = known_and_unknown(&store);
    let matches = ctph::match_against_known(&unknown, &known, g.flag_threshold);
    if g.json {
        return print_json(&json!({"known": known.len(), "unknown": unknown.len(), "matches": matches}));
    }
    println!(
        "{} unlabelled vs {} labelled sample(s); {} match(es) at or above {}",
        unknown.len(),
        known.len(),
        matches.len(),
        g.flag_threshold
    );
    for m in &matches {
        println!("  {}  {}  {:<8} {}", m.unknown_id, m.known_id, m.family, m.score);
    }
    Ok(())
}

fn cmd_report(g: &Global, format: ReportFormat, benign: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let store = open_store(g)?;
    let benign_store = benign
        .map(|p| CorpusStore::open(p).with_context(|| format!("opening benign corpus {}", p.display())))
        .transpose()?;
    let similarity = store.read_similarity()?;
    let (known, unknown) = known_and_unknown(&store);
    let matches = ctph::match_against_known(&unknown, &known, g.flag_threshold);
    let config = load_config(g)?;
    let input = ReportInput {
        similarity: &similarity,
        matches: &matches,
        benign: benign_store.as_ref().map(|s| s.records()),
        detect_gds: g.detect_gds,
        alerts: config.functions,
        ..ReportInput::new(store.records())
    };
    let rep = report::build_report(&input);
    let text = if g.json { serde_json::to_string_pretty(&rep)? + "\n" } else { rep.render(format) };
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_vt(g: &Global, refresh: bool, limit: Option<usize>, min_interval: u64, endpoint: &str) -> Result<()> {
    let mut store = open_store(g)?;
    let key = std::env::var(vt::API_KEY_ENV).ok();
    let transport = HttpTransport::new(Duration::from_secs(60))?;
    let mut client = VtClient::new(transport, store.vt_cache(), key)
        .with_endpoint(endpoint)
        .with_min_interval(Duration::from_secs(min_interval));
    let classifier = FamilyClassifier::new(g.vendor.clone());
    let targets: Vec<(String, String)> = store
        .records()
        .iter()
        .filter(|r| refresh || r.family.is_none())
        .take(limit.unwrap_or(usize::MAX))
        .map(|r| (r.sha1.clone(), r.sha256.clone()))
        .collect();
    let mut labelled = Vec::new();
    let mut not_found = 0;
    let mut missing = 0;
    for (sha1, sha256) in &targets {
        match client.fetch_report(sha256) {
            Ok(v) if v.known => {
                let fam = classifier.classify(&v.verdicts);
                store.set_family(sha1, fam.clone())?;
                labelled.push((sha1.clone(), fam));
            }
            Ok(_) => not_found += 1,
            Err(VtError::MissingApiKey(_)) => missing += 1,
            Err(e) => {
                store.save_index()?;
                return Err(e).with_context(|| format!("fetching report for {sha1}"));
            }
        }
    }
    store.save_index()?;
    if g.json {
        print_json(&json!({
            "targets": targets.len(),
            "labelled": labelled.iter().map(|(id, f)| json!({"sha1": id, "family": f})).collect::<Vec<_>>(),
            "not_found": not_found,
            "missing_key": missing,
        }))?;
    } else {
        println!(
            "{} sample(s) checked: {} labelled, {} unknown to the service",
            targets.len(),
            labelled.len(),
            not_found
        );
        for (id, f) in &labelled {
            println!("  {id}  {f}");
        }
    }
    if missing > 0 {
        return Err(MissingKey(missing).into());
    }
    Ok(())
}
