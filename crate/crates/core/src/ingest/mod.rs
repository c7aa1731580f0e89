//! Populating the graph from files.
//!
//! * molecule catalog: `canonical_name<TAB>alias,alias,...`
//! * interactions: `nameA<TAB>nameB`
//! * corpus: one JSON object per line (see [`PublicationRecord`])
//!
//! Blank lines and lines starting with `#` are ignored in the TSV files.

mod remote;
pub mod replay;
mod tokenize;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphstore::{GraphError, MoleculeId, MultilayerGraph};

pub use remote::{
    fetch_remote, parse_efetch, parse_esearch, Clock, FetchResult, RateLimiter, RemoteClient,
    RemoteConfig, SystemClock,
};
pub use tokenize::{match_mentions, tokens, MatchOptions};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
}

/// One bibliographic record, as stored in the line-delimited corpus file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pub_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub year: Option<i32>,
    #[serde(default)]
    pub authors: Vec<AuthorRecord>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("line {line}: unknown molecule '{name}'")]
    UnknownMolecule { name: String, line: usize },
    #[error("line {line}: {source}")]
    Catalog {
        line: usize,
        #[source]
        source: GraphError,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("remote returned HTTP {0}")]
    HttpError(u16),
    #[error("remote kept rate limiting (HTTP 429) after all retries")]
    RateLimited,
    #[error("remote request timed out")]
    NetworkTimeout,
    #[error("network failure: {0}")]
    Network(String),
    #[error("could not parse remote response: {0}")]
    RemoteParse(String),
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Yields `(1-based line number, trimmed line)` for non-blank, non-comment lines.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

/// Load `canonical<TAB>aliases` lines. Returns the number of distinct
/// molecules named by the file.
pub fn load_molecule_catalog(
    graph: &mut MultilayerGraph,
    path: impl AsRef<Path>,
) -> Result<usize, IngestError> {
    let path = path.as_ref();
    let mut seen = BTreeSet::new();
    for (line_no, line) in data_lines(path)? {
        let mut fields = line.split('\t');
        let name = fields.next().unwrap_or("").trim();
        if name.is_empty() {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: "missing canonical name".into(),
            });
        }
        let aliases = fields.next().unwrap_or("");
        if fields.next().is_some() {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: "expected at most two tab-separated fields".into(),
            });
        }
        let id = graph
            .upsert_molecule(name, aliases.split(','))
            .map_err(|source| IngestError::Catalog {
                line: line_no,
                source,
            })?;
        seen.insert(id);
    }
    Ok(seen.len())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub lines: usize,
    pub created: usize,
    pub duplicates: usize,
    pub self_loops: usize,
}

/// Load `nameA<TAB>nameB` lines. Self-loops are skipped and counted; unknown
/// names are fatal.
pub fn load_interactions(
    graph: &mut MultilayerGraph,
    path: impl AsRef<Path>,
) -> Result<InteractionReport, IngestError> {
    let path = path.as_ref();
    let mut report = InteractionReport::default();
    for (line_no, line) in data_lines(path)? {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 2 || fields.iter().any(|f| f.is_empty()) {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                msg: "expected two tab-separated molecule names".into(),
            });
        }
        let resolve = |name: &str| {
            graph
                .resolve_molecule(name)
                .ok_or_else(|| IngestError::UnknownMolecule {
                    name: name.to_string(),
                    line: line_no,
                })
        };
        let a = resolve(fields[0])?;
        let b = resolve(fields[1])?;
        report.lines += 1;
        match graph.add_interaction(a, b) {
            Ok(true) => report.created += 1,
            Ok(false) => report.duplicates += 1,
            Err(GraphError::SelfLoop(_)) => {
                tracing::warn!(line = line_no, name = fields[0], "skipping self-loop");
                report.self_loops += 1;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records_read: usize,
    pub records_ingested: usize,
    pub records_skipped: usize,
    pub mentions_created: usize,
    /// Distinct molecules matched by at least one record.
    pub molecules_matched: usize,
    pub authors_created: usize,
    pub skip_reasons: BTreeMap<String, usize>,
}

impl IngestReport {
    fn skip(&mut self, reason: &str) {
        self.records_skipped += 1;
        *self.skip_reasons.entry(reason.to_string()).or_default() += 1;
    }
}

fn skip_reason(err: &GraphError) -> &'static str {
    match err {
        GraphError::DuplicateConflict { .. } => "duplicate_conflict",
        GraphError::InvalidRecord(msg) if msg.contains("no authors") => "no_authors",
        GraphError::InvalidRecord(msg) if msg.contains("pub_id") => "empty_pub_id",
        GraphError::InvalidRecord(msg) if msg.contains("year") => "invalid_year",
        _ => "invalid_record",
    }
}

/// Insert one record and its mentions, updating `report`.
pub fn ingest_record(
    graph: &mut MultilayerGraph,
    rec: &PublicationRecord,
    opts: &MatchOptions,
    report: &mut IngestReport,
    matched: &mut BTreeSet<MoleculeId>,
) {
    report.records_read += 1;
    let upsert = match graph.upsert_publication(rec) {
        Ok(u) => u,
        Err(e) => {
            report.skip(skip_reason(&e));
            return;
        }
    };
    report.records_ingested += 1;
    report.authors_created += upsert.authors_created;
    for m in match_mentions(rec, graph, opts) {
        matched.insert(m);
        if graph
            .add_mention(upsert.idx, m)
            .expect("ids come from this graph")
        {
            report.mentions_created += 1;
        }
    }
}

/// Ingest an in-memory sequence of records.
pub fn ingest_records<'a, I>(
    graph: &mut MultilayerGraph,
    records: I,
    opts: &MatchOptions,
) -> IngestReport
where
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    let mut report = IngestReport::default();
    let mut matched = BTreeSet::new();
    for rec in records {
        ingest_record(graph, rec, opts, &mut report, &mut matched);
    }
    report.molecules_matched = matched.len();
    report
}

/// Ingest a line-delimited JSON corpus. Malformed records are skipped and
/// counted; only I/O failures abort.
pub fn ingest_corpus(
    graph: &mut MultilayerGraph,
    path: impl AsRef<Path>,
    opts: &MatchOptions,
) -> Result<IngestReport, IngestError> {
    let path = path.as_ref();
    let mut report = IngestReport::default();
    let mut matched = BTreeSet::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<PublicationRecord>(&line) {
            Ok(rec) => ingest_record(graph, &rec, opts, &mut report, &mut matched),
            Err(e) => {
                tracing::warn!(line = i + 1, error = %e, "skipping malformed record");
                report.records_read += 1;
                report.skip("parse_error");
            }
        }
    }
    report.molecules_matched = matched.len();
    Ok(report)
}

/// Outcome of building a graph from the three input files.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    #[serde(flatten)]
    pub corpus: IngestReport,
    pub molecules: usize,
    pub interactions: InteractionReport,
}

/// Catalog, then interactions, then corpus, into a fresh graph.
pub fn ingest_files(
    catalog: impl AsRef<Path>,
    interactions: impl AsRef<Path>,
    corpus: impl AsRef<Path>,
    opts: &MatchOptions,
) -> Result<(MultilayerGraph, BuildReport), IngestError> {
    let mut graph = MultilayerGraph::new();
    let molecules = load_molecule_catalog(&mut graph, catalog)?;
    let interactions = load_interactions(&mut graph, interactions)?;
    let corpus = ingest_corpus(&mut graph, corpus, opts)?;
    Ok((
        graph,
        BuildReport {
            corpus,
            molecules,
            interactions,
        },
    ))
}

/// Write records as line-delimited JSON.
pub fn write_corpus<'a, W, I>(mut out: W, records: I) -> std::io::Result<usize>
where
    W: std::io::Write,
    I: IntoIterator<Item = &'a PublicationRecord>,
{
    let mut n = 0;
    for rec in records {
        serde_json::to_writer(&mut out, rec)?;
        out.write_all(b"\n")?;
        n += 1;
    }
    out.flush()?;
    Ok(n)
}
