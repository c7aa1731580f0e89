//! `synergy`: build snapshots, rank collaborators, serve the API and run the
//! comparison experiments.
//!
//! Exit codes: 0 ok, 2 usage or input error, 3 not found, 4 remote failure.
//! Data goes to stdout (TSV or JSON), diagnostics to stderr.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use synergy_core::analysis::{
    rank_compare, timing_harness, validation_experiment, write_rank_compare, write_timing, write_validation,
    AnalysisError, ValidationConfig,
};
use synergy_core::graphstore::{load_snapshot, save_snapshot};
use synergy_core::ingest::{fetch_remote, ingest_files, write_corpus, IngestError, MatchOptions, RemoteConfig};
use synergy_core::pathrank::{precompute, rank_method, PagerankStore};
use synergy_core::synth::{generate, SynthConfig};
use synergy_core::{MoleculeId, MultilayerGraph, PagerankConfig, RankMethod, Variant};
use synergy_service::api::round_sig;
use synergy_service::{AppState, ServiceConfig};

#[derive(Parser)]
#[command(name = "synergy", version, about = "Collaborator ranking over a molecule/publication/author network")]
struct Cli {
    /// Log filter, e.g. `info` or `synergy_core=debug`.
    #[arg(long, global = true, default_value = "warn", env = "SYNERGY_LOG")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a snapshot from a catalog, an interaction list and a corpus.
    Ingest {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        interactions: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Only scan abstracts and keywords for molecule names.
        #[arg(long)]
        skip_titles: bool,
    },
    /// Rank authors for one molecule.
    Query {
        #[command(flatten)]
        snap: SnapshotArg,
        #[arg(long)]
        molecule: String,
        #[arg(long, value_parser = parse_method)]
        method: RankMethod,
        #[arg(long)]
        top: Option<usize>,
        /// PageRank store to read from and add to.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Aligned columns instead of TSV.
        #[arg(long)]
        pretty: bool,
    },
    /// Store PageRank scores for later queries.
    Precompute {
        #[command(flatten)]
        snap: SnapshotArg,
        #[arg(long)]
        cache: PathBuf,
        /// Molecule names; all molecules when omitted.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        molecules: Vec<String>,
        #[arg(long, num_args = 1.., value_delimiter = ',', value_parser = parse_variant)]
        variants: Vec<Variant>,
    },
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Ranking comparison, validation and timing experiments.
    #[command(subcommand)]
    Experiment(Experiment),
    /// Download records from an E-utilities compatible service.
    Fetch {
        #[arg(long)]
        query: String,
        #[arg(long)]
        max: usize,
        #[arg(long, default_value = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils")]
        base_url: String,
        #[arg(long, env = "SYNERGY_API_KEY", hide_env_values = true)]
        api_key: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a deterministic synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        publications: Option<usize>,
        #[arg(long)]
        authors: Option<usize>,
        /// Also ingest the corpus into this snapshot.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SnapshotArg {
    #[arg(long, env = "SYNERGY_SNAPSHOT")]
    snapshot: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    snap: SnapshotArg,
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Page cache lifetime in seconds.
    #[arg(long, default_value_t = 3600)]
    cache_ttl: u64,
    #[arg(long, default_value_t = 10_000)]
    cache_size: usize,
    #[arg(long, default_value_t = 4)]
    concurrency: usize,
    /// Allowed CORS origins (`*` for any).
    #[arg(long = "cors-origin", default_value = "*")]
    cors_origins: Vec<String>,
    /// Precompute PageRank for every molecule before accepting requests.
    #[arg(long)]
    precompute: bool,
}

#[derive(Subcommand)]
enum Experiment {
    /// Cross-rank scatter, pub-count curves and correlations for one molecule.
    RankCompare {
        #[command(flatten)]
        snap: SnapshotArg,
        #[arg(long)]
        molecule: String,
        #[arg(long, default_value_t = 120)]
        top_t: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Co-author proximity experiment.
    Validate {
        #[command(flatten)]
        snap: SnapshotArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        n_molecules: usize,
        #[arg(long, default_value_t = 250)]
        n_authors: usize,
        #[arg(long, default_value_t = 5)]
        min_pubs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean and variance of query time per method.
    Timing {
        #[command(flatten)]
        snap: SnapshotArg,
        /// Molecule names; all molecules when omitted.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        molecules: Vec<String>,
        #[arg(long, default_value_t = 5)]
        repetitions: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_method(s: &str) -> Result<RankMethod, String> {
    s.parse().map_err(|e: synergy_core::countrank::RankError| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: synergy_core::countrank::RankError| e.to_string())
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn input(msg: impl ToString) -> Self {
        Self { code: 2, msg: msg.to_string() }
    }
    fn not_found(msg: impl ToString) -> Self {
        Self { code: 3, msg: msg.to_string() }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let code = match e {
            IngestError::HttpError(_)
            | IngestError::RateLimited
            | IngestError::NetworkTimeout
            | IngestError::Network(_)
            | IngestError::RemoteParse(_) => 4,
            _ => 2,
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        Self::input(e)
    }
}

impl From<synergy_core::countrank::RankError> for Failure {
    fn from(e: synergy_core::countrank::RankError) -> Self {
        Self::input(e)
    }
}

impl From<synergy_core::GraphError> for Failure {
    fn from(e: synergy_core::GraphError) -> Self {
        Self::input(e)
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::input(format!("{}: {e}", path.display()))
}

type Outcome = Result<(), Failure>;

fn load(snap: &SnapshotArg) -> Result<MultilayerGraph, Failure> {
    load_snapshot(&snap.snapshot).map_err(|e| Failure::input(format!("{}: {e}", snap.snapshot.display())))
}

fn resolve(g: &MultilayerGraph, name: &str) -> Result<MoleculeId, Failure> {
    g.resolve_molecule(name)
        .ok_or_else(|| Failure::not_found(format!("unknown molecule '{name}'")))
}

fn resolve_all(g: &MultilayerGraph, names: &[String]) -> Result<BTreeSet<MoleculeId>, Failure> {
    if names.is_empty() {
        return Ok(g.molecules().iter().map(|m| m.id).collect());
    }
    names.iter().map(|n| resolve(g, n)).collect()
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn open_store(path: &Path) -> Result<PagerankStore, Failure> {
    PagerankStore::open(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Ingest {
            catalog,
            interactions,
            corpus,
            out,
            skip_titles,
        } => {
            let opts = MatchOptions {
                include_title: !skip_titles,
            };
            let (graph, report) = ingest_files(&catalog, &interactions, &corpus, &opts)?;
            save_snapshot(&graph, &out)?;
            print_json(&report);
        }
        Command::Query {
            snap,
            molecule,
            method,
            top,
            cache,
            pretty,
        } => {
            let g = load(&snap)?;
            let m = resolve(&g, &molecule)?;
            let store = cache.as_deref().map(open_store).transpose()?;
            let (list, _) = rank_method(&g, m, method, &PagerankConfig::default(), store.as_ref())?;
            if let Some(store) = &store {
                store.save()?;
            }
            let rows: Vec<[String; 5]> = list
                .entries
                .iter()
                .take(top.unwrap_or(usize::MAX))
                .enumerate()
                .map(|(i, e)| {
                    let affiliation = g.author(e.author).ok().and_then(|a| a.affiliation.clone());
                    let mut related: Vec<(String, u32)> = e
                        .contribution
                        .per_molecule
                        .iter()
                        .map(|(&m, &n)| (g.molecule(m).map(|x| x.canonical_name.clone()).unwrap_or_default(), n))
                        .collect();
                    related.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                    let related = related.iter().map(|(n, c)| format!("{n}:{c}")).collect::<Vec<_>>().join(",");
                    [
                        (i + 1).to_string(),
                        e.author_name.clone(),
                        round_sig(e.score).to_string(),
                        related,
                        affiliation.unwrap_or_default(),
                    ]
                })
                .collect();
            print_table(&rows, pretty);
        }
        Command::Precompute {
            snap,
            cache,
            molecules,
            variants,
        } => {
            let g = load(&snap)?;
            let ms = resolve_all(&g, &molecules)?;
            let store = open_store(&cache)?;
            let variants = if variants.is_empty() { Variant::BOTH.to_vec() } else { variants };
            let report = precompute(&g, &ms, &variants, &PagerankConfig::default(), &store)?;
            print_json(&report);
        }
        Command::Serve(args) => serve(args)?,
        Command::Experiment(e) => experiment(e)?,
        Command::Fetch {
            query,
            max,
            base_url,
            api_key,
            out,
        } => {
            let cfg = RemoteConfig {
                api_key: api_key.filter(|k| !k.is_empty()),
                ..RemoteConfig::new(base_url)
            };
            let got = fetch_remote(&query, max, cfg)?;
            let file = File::create(&out).map_err(io_failure(&out))?;
            let mut w = BufWriter::new(file);
            write_corpus(&mut w, &got.records).map_err(io_failure(&out))?;
            w.flush().map_err(io_failure(&out))?;
            print_json(&json!({
                "records": got.records.len(),
                "skipped": got.skipped,
                "requests": got.requests,
            }));
        }
        Command::Synth {
            out,
            seed,
            publications,
            authors,
            snapshot,
        } => {
            let d = SynthConfig::default();
            let cfg = SynthConfig {
                seed,
                publications: publications.unwrap_or(d.publications),
                authors: authors.unwrap_or(d.authors),
                ..d
            };
            let corpus = generate(&cfg);
            corpus.write_files(&out).map_err(io_failure(&out))?;
            if let Some(path) = snapshot {
                let (g, report) = corpus.build_graph()?;
                save_snapshot(&g, &path)?;
                print_json(&report);
            }
        }
    }
    Ok(())
}

fn print_table(rows: &[[String; 5]], pretty: bool) {
    let header = ["rank", "author", "score", "related_molecules", "affiliation"];
    let mut out = std::io::stdout().lock();
    if !pretty {
        let _ = writeln!(out, "{}", header.join("\t"));
        for r in rows {
            let _ = writeln!(out, "{}", r.join("\t"));
        }
        return;
    }
    let mut widths = header.map(str::len);
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[&str]| {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(&header));
    for r in rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        let _ = writeln!(out, "{}", line(&cells));
    }
}

fn serve(args: ServeArgs) -> Outcome {
    let addr: SocketAddr = args
        .listen
        .parse()
        .map_err(|_| Failure::input(format!("invalid listen address '{}'", args.listen)))?;
    let g = load(&args.snap)?;
    let store = match &args.cache {
        Some(p) => open_store(p)?,
        None => PagerankStore::in_memory(),
    };
    let config = ServiceConfig {
        cache_ttl: Duration::from_secs(args.cache_ttl),
        cache_capacity: args.cache_size,
        compute_concurrency: args.concurrency,
        cors_origins: args.cors_origins,
        ..Default::default()
    };
    if args.precompute {
        let all = g.molecules().iter().map(|m| m.id).collect();
        let report = precompute(&g, &all, &Variant::BOTH, &config.pagerank, &store)?;
        tracing::info!(?report, "precompute finished");
    }
    let state = AppState::new(config);
    state.install(g, store);

    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::input(e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| Failure::input(format!("cannot listen on {addr}: {e}")))?;
        eprintln!("listening on http://{}", listener.local_addr().map_err(Failure::input)?);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        synergy_service::serve(listener, state, shutdown)
            .await
            .map_err(Failure::input)
    })
}

fn experiment(e: Experiment) -> Outcome {
    let cfg = PagerankConfig::default();
    match e {
        Experiment::RankCompare {
            snap,
            molecule,
            top_t,
            out,
        } => {
            if top_t == 0 {
                return Err(Failure::input("--top-t must be at least 1"));
            }
            let g = load(&snap)?;
            let m = resolve(&g, &molecule)?;
            let report = rank_compare(&g, m, top_t, &cfg)?;
            let files = write_rank_compare(&report, &out)?;
            let correlations: Vec<_> = report
                .correlations
                .iter()
                .map(|c| json!({"pair": c.pair, "pearson_r": c.pearson_r, "points": c.points.len()}))
                .collect();
            print_json(&json!({
                "molecule": report.query_molecule,
                "top_t": top_t,
                "correlations": correlations,
                "pagerank_top_jaccard": report.pagerank_top_jaccard,
                "files": files,
            }));
        }
        Experiment::Validate {
            snap,
            seed,
            n_molecules,
            n_authors,
            min_pubs,
            out,
        } => {
            let g = load(&snap)?;
            let vc = ValidationConfig {
                n_molecules,
                n_authors,
                min_pubs,
                seed,
                ..Default::default()
            };
            let result = validation_experiment(&g, &vc)?;
            write_validation(&result, &out)?;
            print_json(&result);
        }
        Experiment::Timing {
            snap,
            molecules,
            repetitions,
            out,
        } => {
            let g = load(&snap)?;
            let ms: Vec<MoleculeId> = resolve_all(&g, &molecules)?.into_iter().collect();
            let report = timing_harness(&g, &ms, &RankMethod::ALL, repetitions, &cfg)?;
            write_timing(&report, &out)?;
            print_json(&report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| "warn".into());
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
