//! Publication-count rankings of the authors around a query molecule.
//!
//! For a query molecule the related molecules are its interaction
//! neighbors. Every author with a publication mentioning a related molecule
//! gets an [`AuthorContribution`], and the contributions are ranked three
//! ways: by hypergeometric enrichment p-value, and by related-molecule
//! coverage with either the raw (`n_pc`) or normalized (`n_pc / n_total`)
//! publication count as tie-break.

pub mod hypergeom;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphstore::{AuthorId, GraphError, MoleculeId, MultilayerGraph};

pub use hypergeom::{hypergeom_sf, hypergeom_sf_with, HypergeomQuery, LogFactorials};

#[derive(Debug, Error)]
pub enum RankError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("total publication count is zero")]
    ZeroTotal,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("co-authorship network is empty")]
    EmptyNetwork,
    #[error("unknown ranking method '{0}'")]
    UnknownMethod(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    Hypergeometric,
    CountNonnorm,
    CountNorm,
    PagerankNonnorm,
    PagerankNorm,
}

impl RankMethod {
    pub const ALL: [RankMethod; 5] = [
        RankMethod::Hypergeometric,
        RankMethod::CountNonnorm,
        RankMethod::CountNorm,
        RankMethod::PagerankNonnorm,
        RankMethod::PagerankNorm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankMethod::Hypergeometric => "hypergeometric",
            RankMethod::CountNonnorm => "count_nonnorm",
            RankMethod::CountNorm => "count_norm",
            RankMethod::PagerankNonnorm => "pagerank_nonnorm",
            RankMethod::PagerankNorm => "pagerank_norm",
        }
    }

    pub fn is_pagerank(self) -> bool {
        matches!(self, RankMethod::PagerankNonnorm | RankMethod::PagerankNorm)
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RankMethod {
    type Err = RankError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RankMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| RankError::UnknownMethod(s.to_string()))
    }
}

/// Exact non-negative rational, compared by cross-multiplication.
#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Fraction {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fraction {}

impl PartialOrd for Fraction {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fraction {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// Normalized publication count `n_pc / n_total`.
pub fn r_pc(n_pc: u64, n_total: u64) -> Result<Fraction, RankError> {
    if n_total == 0 {
        return Err(RankError::ZeroTotal);
    }
    Ok(Fraction {
        num: n_pc,
        den: n_total,
    })
}

/// One author's publication record around a query molecule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorContribution {
    pub author: AuthorId,
    pub author_name: String,
    /// Publications per related molecule. A publication mentioning two
    /// related molecules counts once for each.
    pub per_molecule: BTreeMap<MoleculeId, u32>,
    /// Sum of `per_molecule`.
    pub n_pc: u32,
    /// Distinct publications mentioning at least one related molecule.
    pub k_distinct: u32,
    pub n_total: u32,
}

impl AuthorContribution {
    /// Number of distinct related molecules the author published on.
    pub fn molecule_count(&self) -> usize {
        self.per_molecule.len()
    }

    pub fn r_pc(&self) -> Fraction {
        r_pc(self.n_pc as u64, self.n_total as u64).expect("contributing authors have n_total >= 1")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub author: AuthorId,
    pub author_name: String,
    /// Method-specific score: p-value, `n_pc`, `r_pc` or PageRank score.
    pub score: f64,
    pub contribution: AuthorContribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub method: RankMethod,
    pub query_molecule: MoleculeId,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank of every author.
    pub fn ranks(&self) -> HashMap<AuthorId, usize> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.author, i + 1))
            .collect()
    }

    pub fn authors(&self) -> impl Iterator<Item = AuthorId> + '_ {
        self.entries.iter().map(|e| e.author)
    }
}

/// Per-author contributions for query molecule `m`, in author-id order.
pub fn contributions(
    graph: &MultilayerGraph,
    m: MoleculeId,
) -> Result<Vec<AuthorContribution>, RankError> {
    let related = graph.related_molecules(m, false)?;
    let related_pubs = graph.publications_mentioning(&related)?;
    let mut per_author: HashMap<AuthorId, (BTreeMap<MoleculeId, u32>, u32)> = HashMap::new();
    let mut hits = Vec::new();
    for &p in &related_pubs {
        hits.clear();
        hits.extend(
            graph
                .mentioned_molecules(p)?
                .iter()
                .filter(|r| related.contains(r)),
        );
        for &a in graph.publication_authors(p)? {
            let (per_molecule, distinct) = per_author.entry(a).or_default();
            *distinct += 1;
            for &r in &hits {
                *per_molecule.entry(r).or_default() += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(per_author.len());
    for (a, (per_molecule, k_distinct)) in per_author {
        out.push(AuthorContribution {
            author: a,
            author_name: graph.author(a)?.canonical_name.clone(),
            n_pc: per_molecule.values().sum(),
            per_molecule,
            k_distinct,
            n_total: graph.n_total(a)? as u32,
        });
    }
    out.sort_by_key(|c| c.author);
    Ok(out)
}

fn by_name(a: &AuthorContribution, b: &AuthorContribution) -> Ordering {
    a.author_name
        .cmp(&b.author_name)
        .then(a.author.cmp(&b.author))
}

/// Count-ranking order: related-molecule coverage desc, then `n_pc` desc
/// (or exact `r_pc` desc when `normalized`), then name asc.
pub fn count_order(a: &AuthorContribution, b: &AuthorContribution, normalized: bool) -> Ordering {
    let by_coverage = b.molecule_count().cmp(&a.molecule_count());
    let by_count = if normalized {
        b.r_pc().cmp(&a.r_pc())
    } else {
        b.n_pc.cmp(&a.n_pc)
    };
    by_coverage.then(by_count).then_with(|| by_name(a, b))
}

pub fn rank_count(
    query_molecule: MoleculeId,
    mut contribs: Vec<AuthorContribution>,
    normalized: bool,
) -> RankedList {
    contribs.sort_by(|a, b| count_order(a, b, normalized));
    let entries = contribs
        .into_iter()
        .map(|c| RankedEntry {
            author: c.author,
            author_name: c.author_name.clone(),
            score: if normalized {
                c.r_pc().to_f64()
            } else {
                c.n_pc as f64
            },
            contribution: c,
        })
        .collect();
    RankedList {
        method: if normalized {
            RankMethod::CountNorm
        } else {
            RankMethod::CountNonnorm
        },
        query_molecule,
        entries,
    }
}

/// Rank by `P(X >= k_distinct)` with population = all publications,
/// successes = distinct publications on related molecules, sample = the
/// author's `n_total`.
pub fn rank_hypergeometric(graph: &MultilayerGraph, m: MoleculeId) -> Result<RankedList, RankError> {
    let contribs = contributions(graph, m)?;
    let related = graph.related_molecules(m, false)?;
    let population = graph.publication_count() as u64;
    let successes = graph.publications_mentioning(&related)?.len() as u64;
    let lf = LogFactorials::new(population as usize);

    let mut scored = contribs
        .into_iter()
        .map(|c| {
            let p = hypergeom_sf_with(
                &lf,
                &HypergeomQuery {
                    population,
                    successes,
                    sample: c.n_total as u64,
                    observed: c.k_distinct as u64,
                },
            )?;
            Ok((p, c))
        })
        .collect::<Result<Vec<_>, RankError>>()?;
    scored.sort_by(|(pa, a), (pb, b)| {
        pa.total_cmp(pb)
            .then(b.n_pc.cmp(&a.n_pc))
            .then_with(|| by_name(a, b))
    });
    Ok(RankedList {
        method: RankMethod::Hypergeometric,
        query_molecule: m,
        entries: scored
            .into_iter()
            .map(|(p, c)| RankedEntry {
                author: c.author,
                author_name: c.author_name.clone(),
                score: p,
                contribution: c,
            })
            .collect(),
    })
}
