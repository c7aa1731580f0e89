//! Co-authorship subnetworks and weighted PageRank.
//!
//! A subnetwork is built per query molecule, one related molecule at a time:
//! the strongest co-author pairs on each related molecule are kept and the
//! union of those pairs becomes the edge set. Edge strength is the number of
//! distinct co-authored publications on any related molecule, optionally
//! discounted by both authors' overall productivity.

mod pagerank;
mod store;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::countrank::{
    contributions, rank_count, rank_hypergeometric, RankError, RankMethod, RankedEntry, RankedList,
};
use crate::graphstore::{AuthorId, MoleculeId, MultilayerGraph, PubIdx};

pub use pagerank::{pagerank, pagerank_personalized, PagerankOutcome};
pub use store::{precompute, PagerankStore, PrecomputeReport, StoredScores};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Edge weight is the co-authored publication count.
    Nonnorm,
    /// Edge weight is the count divided by `sqrt(N_x * N_y)`.
    Norm,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::Nonnorm, Variant::Norm];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Nonnorm => "nonnorm",
            Variant::Norm => "norm",
        }
    }

    pub fn method(self) -> RankMethod {
        match self {
            Variant::Nonnorm => RankMethod::PagerankNonnorm,
            Variant::Norm => RankMethod::PagerankNorm,
        }
    }

    pub fn of_method(m: RankMethod) -> Option<Variant> {
        match m {
            RankMethod::PagerankNonnorm => Some(Variant::Nonnorm),
            RankMethod::PagerankNorm => Some(Variant::Norm),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = RankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nonnorm" | "pagerank_nonnorm" => Ok(Variant::Nonnorm),
            "norm" | "pagerank_norm" => Ok(Variant::Norm),
            _ => Err(RankError::InvalidParams(format!("unknown variant '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PagerankConfig {
    pub damping: f64,
    /// Stop when the L1 change between iterations drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Co-author pairs kept per related molecule (ties at the cutoff kept).
    pub top_pairs_per_molecule: usize,
}

impl Default for PagerankConfig {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tolerance: 1e-9,
            max_iterations: 100,
            top_pairs_per_molecule: 500,
        }
    }
}

impl PagerankConfig {
    pub fn validate(&self) -> Result<(), RankError> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(RankError::InvalidParams(format!(
                "damping must be in (0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(RankError::InvalidParams(
                "tolerance must be positive and max_iterations at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoauthorEdge {
    /// Always the smaller id of the pair.
    pub x: AuthorId,
    pub y: AuthorId,
    /// Distinct co-authored publications mentioning a related molecule.
    pub m_xy: u32,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoauthorSubnetwork {
    pub query_molecule: MoleculeId,
    pub variant: Variant,
    /// Sorted ascending.
    pub nodes: Vec<AuthorId>,
    /// Sorted by `(x, y)`.
    pub edges: Vec<CoauthorEdge>,
    pub built_at_revision: u64,
}

impl CoauthorSubnetwork {
    /// A network over explicit nodes and weighted edges (for tests and
    /// callers with their own graphs). Edge endpoints are normalized to
    /// `x < y`.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = AuthorId>,
        edges: impl IntoIterator<Item = (AuthorId, AuthorId, f64)>,
    ) -> Self {
        let mut nodes: Vec<_> = nodes.into_iter().collect();
        nodes.sort();
        nodes.dedup();
        let mut edges: Vec<_> = edges
            .into_iter()
            .map(|(a, b, w)| CoauthorEdge {
                x: a.min(b),
                y: a.max(b),
                m_xy: 1,
                weight: w,
            })
            .collect();
        edges.sort_by_key(|e| (e.x, e.y));
        Self {
            query_molecule: MoleculeId(0),
            variant: Variant::Nonnorm,
            nodes,
            edges,
            built_at_revision: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Collaboration strength `m_xy / sqrt(n_x * n_y)`.
pub fn eq2_weight(m_xy: u32, n_x: u32, n_y: u32) -> Result<f64, RankError> {
    if n_x == 0 || n_y == 0 {
        return Err(RankError::ZeroTotal);
    }
    Ok(m_xy as f64 / (n_x as f64 * n_y as f64).sqrt())
}

fn sorted_pairs(authors: &[AuthorId], out: &mut Vec<(AuthorId, AuthorId)>) {
    out.clear();
    for (i, &a) in authors.iter().enumerate() {
        for &b in &authors[i + 1..] {
            out.push((a.min(b), a.max(b)));
        }
    }
}

/// Keep the `k` strongest pairs, plus every pair tied with the k-th.
fn top_pairs(
    counts: HashMap<(AuthorId, AuthorId), u32>,
    k: usize,
) -> impl Iterator<Item = (AuthorId, AuthorId)> {
    let mut ranked: Vec<_> = counts.into_iter().collect();
    ranked.sort_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then(pa.cmp(pb)));
    if k == 0 {
        ranked.clear();
    } else if ranked.len() > k {
        let cutoff = ranked[k - 1].1;
        let keep = ranked.partition_point(|&(_, c)| c >= cutoff);
        ranked.truncate(keep);
    }
    ranked.into_iter().map(|(p, _)| p)
}

pub fn build_subnetwork(
    graph: &MultilayerGraph,
    m: MoleculeId,
    variant: Variant,
    cfg: &PagerankConfig,
) -> Result<CoauthorSubnetwork, RankError> {
    let related = graph.related_molecules(m, false)?;
    let mut pairs = Vec::new();

    let mut kept: HashSet<(AuthorId, AuthorId)> = HashSet::new();
    for &r in &related {
        let mut counts: HashMap<(AuthorId, AuthorId), u32> = HashMap::new();
        for &p in graph.mentions_of(r)? {
            sorted_pairs(graph.publication_authors(p)?, &mut pairs);
            for &pair in &pairs {
                *counts.entry(pair).or_default() += 1;
            }
        }
        kept.extend(top_pairs(counts, cfg.top_pairs_per_molecule));
    }

    let related_pubs: Vec<PubIdx> = graph.publications_mentioning(&related)?.into_iter().collect();
    let mut nodes: HashSet<AuthorId> = HashSet::new();
    let mut m_xy: HashMap<(AuthorId, AuthorId), u32> = HashMap::new();
    for &p in &related_pubs {
        let authors = graph.publication_authors(p)?;
        nodes.extend(authors.iter().copied());
        sorted_pairs(authors, &mut pairs);
        for pair in &pairs {
            if kept.contains(pair) {
                *m_xy.entry(*pair).or_default() += 1;
            }
        }
    }

    let mut edges = m_xy
        .into_iter()
        .map(|((x, y), count)| {
            let weight = match variant {
                Variant::Nonnorm => count as f64,
                Variant::Norm => eq2_weight(
                    count,
                    graph.n_total(x)? as u32,
                    graph.n_total(y)? as u32,
                )?,
            };
            Ok(CoauthorEdge {
                x,
                y,
                m_xy: count,
                weight,
            })
        })
        .collect::<Result<Vec<_>, RankError>>()?;
    edges.sort_by_key(|e| (e.x, e.y));
    let mut nodes: Vec<_> = nodes.into_iter().collect();
    nodes.sort();

    Ok(CoauthorSubnetwork {
        query_molecule: m,
        variant,
        nodes,
        edges,
        built_at_revision: graph.revision(),
    })
}

/// Attach contributions to a score table and sort by score desc, then name.
fn ranked_from_scores(
    graph: &MultilayerGraph,
    m: MoleculeId,
    variant: Variant,
    scores: &[(AuthorId, f64)],
) -> Result<RankedList, RankError> {
    let mut by_author: HashMap<AuthorId, _> = contributions(graph, m)?
        .into_iter()
        .map(|c| (c.author, c))
        .collect();
    let mut entries = scores
        .iter()
        .map(|&(a, score)| {
            let contribution = by_author.remove(&a).ok_or_else(|| {
                RankError::InvalidParams(format!("author {a} has no contribution for molecule {m}"))
            })?;
            Ok(RankedEntry {
                author: a,
                author_name: contribution.author_name.clone(),
                score,
                contribution,
            })
        })
        .collect::<Result<Vec<_>, RankError>>()?;
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.author_name.cmp(&b.author_name))
            .then(a.author.cmp(&b.author))
    });
    Ok(RankedList {
        method: variant.method(),
        query_molecule: m,
        entries,
    })
}

/// Cold PageRank ranking: build the subnetwork and iterate from scratch.
pub fn rank_pagerank(
    graph: &MultilayerGraph,
    m: MoleculeId,
    variant: Variant,
    cfg: &PagerankConfig,
) -> Result<RankedList, RankError> {
    let scores = compute_scores(graph, m, variant, cfg)?;
    ranked_from_scores(graph, m, variant, &scores.scores)
}

/// PageRank ranking served from `store` when it holds scores for the
/// current graph revision; otherwise computed and inserted.
pub fn rank_pagerank_cached(
    graph: &MultilayerGraph,
    m: MoleculeId,
    variant: Variant,
    cfg: &PagerankConfig,
    store: &PagerankStore,
) -> Result<(RankedList, bool), RankError> {
    if let Some(hit) = store.get(m, variant, graph.revision()) {
        return Ok((ranked_from_scores(graph, m, variant, &hit.scores)?, true));
    }
    let scores = compute_scores(graph, m, variant, cfg)?;
    let list = ranked_from_scores(graph, m, variant, &scores.scores)?;
    store.insert(m, variant, scores);
    Ok((list, false))
}

/// Rank with any of the five methods. PageRank goes through `store` when
/// one is given; the flag reports a store hit.
pub fn rank_method(
    graph: &MultilayerGraph,
    m: MoleculeId,
    method: RankMethod,
    cfg: &PagerankConfig,
    store: Option<&PagerankStore>,
) -> Result<(RankedList, bool), RankError> {
    match (Variant::of_method(method), store) {
        (Some(v), Some(store)) => rank_pagerank_cached(graph, m, v, cfg, store),
        (Some(v), None) => Ok((rank_pagerank(graph, m, v, cfg)?, false)),
        (None, _) if method == RankMethod::Hypergeometric => Ok((rank_hypergeometric(graph, m)?, false)),
        (None, _) => Ok((
            rank_count(m, contributions(graph, m)?, method == RankMethod::CountNorm),
            false,
        )),
    }
}

pub(crate) fn compute_scores(
    graph: &MultilayerGraph,
    m: MoleculeId,
    variant: Variant,
    cfg: &PagerankConfig,
) -> Result<StoredScores, RankError> {
    cfg.validate()?;
    let net = build_subnetwork(graph, m, variant, cfg)?;
    if net.is_empty() {
        return Ok(StoredScores {
            revision: graph.revision(),
            scores: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    let out = pagerank(&net, cfg)?;
    Ok(StoredScores {
        revision: graph.revision(),
        scores: out.scores,
        iterations: out.iterations as u32,
        converged: out.converged,
    })
}
