//! Persisted PageRank score tables (`pagerank.cache`).
//!
//! Entries are keyed by `(molecule, variant)` and stamped with the graph
//! revision they were computed at; a lookup at any other revision misses.
//!
//! File layout mirrors the graph snapshot: magic `PRC1`, `u32` version,
//! `u64` entry count, entries, then a SHA-256 trailer. Each entry is
//! `u32 molecule, u8 variant, u64 revision, u32 iterations, u8 converged,
//! u32 n, n x (u32 author, f64 score)`.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::{compute_scores, PagerankConfig, Variant};
use crate::countrank::RankError;
use crate::graphstore::snapshot::{read_verified, Decoder, Encoder};
use crate::graphstore::{AuthorId, GraphError, MoleculeId, MultilayerGraph};

const MAGIC: &[u8; 4] = b"PRC1";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct StoredScores {
    pub revision: u64,
    pub scores: Vec<(AuthorId, f64)>,
    pub iterations: u32,
    pub converged: bool,
}

type Key = (MoleculeId, Variant);

/// Thread-safe score store: concurrent reads, serialized writes.
#[derive(Debug, Default)]
pub struct PagerankStore {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<Key, Arc<StoredScores>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecomputeReport {
    pub stored: usize,
    /// Already present at the current revision.
    pub skipped: usize,
    /// Molecules without interaction neighbors (nothing to rank).
    pub no_neighbors: usize,
}

impl PagerankStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open a file-backed store, loading existing entries if the file exists.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, GraphError> {
        let path = path.into();
        let entries = if path.exists() {
            load(&path)?
        } else {
            HashMap::new()
        };
        Ok(Self {
            path: Some(path),
            entries: RwLock::new(entries),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, m: MoleculeId, variant: Variant, revision: u64) -> Option<Arc<StoredScores>> {
        self.entries
            .read()
            .unwrap()
            .get(&(m, variant))
            .filter(|e| e.revision == revision)
            .cloned()
    }

    pub fn insert(&self, m: MoleculeId, variant: Variant, scores: StoredScores) {
        self.entries
            .write()
            .unwrap()
            .insert((m, variant), Arc::new(scores));
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drop entries computed at any revision other than `revision`.
    pub fn retain_revision(&self, revision: u64) -> usize {
        let mut entries = self.entries.write().unwrap();
        let before = entries.len();
        entries.retain(|_, e| e.revision == revision);
        before - entries.len()
    }

    /// Persist to the backing file (no-op for in-memory stores).
    pub fn save(&self) -> Result<(), GraphError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let entries = self.entries.read().unwrap();
        let mut keys: Vec<_> = entries.keys().copied().collect();
        keys.sort();
        let mut out = Encoder::default();
        out.buf.extend_from_slice(MAGIC);
        out.u32(VERSION);
        out.u64(keys.len() as u64);
        for key in keys {
            let e = &entries[&key];
            out.u32(key.0 .0);
            out.u8(match key.1 {
                Variant::Nonnorm => 0,
                Variant::Norm => 1,
            });
            out.u64(e.revision);
            out.u32(e.iterations);
            out.u8(e.converged as u8);
            out.u32(e.scores.len() as u32);
            for &(a, s) in &e.scores {
                out.u32(a.0);
                out.f64(s);
            }
        }
        out.finish_to(path)?;
        Ok(())
    }
}

fn load(path: &Path) -> Result<HashMap<Key, Arc<StoredScores>>, GraphError> {
    let payload = read_verified(path, MAGIC, VERSION)?;
    let mut d = Decoder::new(&payload);
    let count = d.u64()?;
    let mut entries = HashMap::new();
    for _ in 0..count {
        let m = MoleculeId(d.u32()?);
        let variant = match d.u8()? {
            0 => Variant::Nonnorm,
            1 => Variant::Norm,
            v => return Err(GraphError::Corrupt(format!("unknown variant tag {v}"))),
        };
        let revision = d.u64()?;
        let iterations = d.u32()?;
        let converged = d.u8()? != 0;
        let n = d.u32()?;
        let scores = (0..n)
            .map(|_| Ok((AuthorId(d.u32()?), d.f64()?)))
            .collect::<Result<Vec<_>, GraphError>>()?;
        entries.insert(
            (m, variant),
            Arc::new(StoredScores {
                revision,
                scores,
                iterations,
                converged,
            }),
        );
    }
    Ok(entries)
}

/// Compute and store score tables for every molecule/variant pair missing
/// at the graph's current revision, then persist the store.
pub fn precompute(
    graph: &MultilayerGraph,
    molecules: &BTreeSet<MoleculeId>,
    variants: &[Variant],
    cfg: &PagerankConfig,
    store: &PagerankStore,
) -> Result<PrecomputeReport, RankError> {
    let mut report = PrecomputeReport::default();
    for &m in molecules {
        if graph.interaction_neighbors(m)?.is_empty() {
            report.no_neighbors += 1;
            continue;
        }
        for &variant in variants {
            if store.get(m, variant, graph.revision()).is_some() {
                report.skipped += 1;
                continue;
            }
            store.insert(m, variant, compute_scores(graph, m, variant, cfg)?);
            report.stored += 1;
        }
    }
    if report.stored > 0 {
        store.save()?;
    }
    Ok(report)
}
