//! Cross-method rank comparison.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{pearson, AnalysisError};
use crate::countrank::{contributions, rank_count, rank_hypergeometric, RankMethod, RankedList};
use crate::graphstore::{MoleculeId, MultilayerGraph};
use crate::pathrank::{rank_pagerank, PagerankConfig, Variant};

/// The three method pairs compared by [`rank_compare`]: the reference
/// method comes first.
pub const COMPARED_PAIRS: [(RankMethod, RankMethod); 3] = [
    (RankMethod::CountNonnorm, RankMethod::CountNorm),
    (RankMethod::CountNonnorm, RankMethod::Hypergeometric),
    (RankMethod::PagerankNonnorm, RankMethod::PagerankNorm),
];

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossRank {
    /// `(rank in A, rank in B)`, 1-based, in A's order.
    pub points: Vec<(usize, usize)>,
    /// Authors among A's top entries that B does not rank.
    pub missing: usize,
}

/// Pair each of A's first `top_t` authors with its rank in B.
pub fn cross_rank(a: &RankedList, b: &RankedList, top_t: usize) -> CrossRank {
    let ranks_b = b.ranks();
    let mut out = CrossRank::default();
    for (i, author) in a.authors().take(top_t).enumerate() {
        match ranks_b.get(&author) {
            Some(&rb) => out.points.push((i + 1, rb)),
            None => out.missing += 1,
        }
    }
    out
}

/// `(rank, n_pc)` for the first `top_t` entries.
pub fn pubcount_curve(ranked: &RankedList, top_t: usize) -> Vec<(usize, u32)> {
    ranked
        .entries
        .iter()
        .take(top_t)
        .enumerate()
        .map(|(i, e)| (i + 1, e.contribution.n_pc))
        .collect()
}

/// |A ∩ B| / |A ∪ B| over the first `top_t` authors of each list.
pub fn top_jaccard(a: &RankedList, b: &RankedList, top_t: usize) -> f64 {
    let sa: HashSet<_> = a.authors().take(top_t).collect();
    let sb: HashSet<_> = b.authors().take(top_t).collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub query_molecule: String,
    pub pair: (RankMethod, RankMethod),
    pub top_t: usize,
    /// `None` when fewer than two points or a constant rank series.
    pub pearson_r: Option<f64>,
    pub points: Vec<(usize, usize)>,
    pub missing: usize,
}

pub fn correlation(query_molecule: &str, a: &RankedList, b: &RankedList, top_t: usize) -> CorrelationReport {
    let cr = cross_rank(a, b, top_t);
    let xs: Vec<f64> = cr.points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = cr.points.iter().map(|p| p.1 as f64).collect();
    CorrelationReport {
        query_molecule: query_molecule.to_string(),
        pair: (a.method, b.method),
        top_t,
        pearson_r: pearson(&xs, &ys).ok(),
        points: cr.points,
        missing: cr.missing,
    }
}

/// All five rankings for one query molecule.
#[derive(Clone, Debug)]
pub struct MethodRankings {
    pub molecule: MoleculeId,
    pub lists: Vec<RankedList>,
}

impl MethodRankings {
    pub fn compute(graph: &MultilayerGraph, m: MoleculeId, cfg: &PagerankConfig) -> Result<Self, AnalysisError> {
        let contribs = contributions(graph, m)?;
        let lists = vec![
            rank_hypergeometric(graph, m)?,
            rank_count(m, contribs.clone(), false),
            rank_count(m, contribs, true),
            rank_pagerank(graph, m, Variant::Nonnorm, cfg)?,
            rank_pagerank(graph, m, Variant::Norm, cfg)?,
        ];
        Ok(Self { molecule: m, lists })
    }

    pub fn get(&self, method: RankMethod) -> &RankedList {
        self.lists
            .iter()
            .find(|l| l.method == method)
            .expect("every method is computed")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCompareReport {
    pub query_molecule: String,
    pub top_t: usize,
    pub correlations: Vec<CorrelationReport>,
    /// `(method, [(rank, n_pc)])` for every method.
    pub pubcount_curves: Vec<(RankMethod, Vec<(usize, u32)>)>,
    /// Jaccard overlap of the two PageRank variants' top lists.
    pub pagerank_top_jaccard: f64,
}

pub fn rank_compare(
    graph: &MultilayerGraph,
    m: MoleculeId,
    top_t: usize,
    cfg: &PagerankConfig,
) -> Result<RankCompareReport, AnalysisError> {
    if top_t == 0 {
        return Err(AnalysisError::DegenerateInput("top_t must be positive".into()));
    }
    let name = graph.molecule(m)?.canonical_name.clone();
    let all = MethodRankings::compute(graph, m, cfg)?;
    let correlations = COMPARED_PAIRS
        .iter()
        .map(|&(a, b)| correlation(&name, all.get(a), all.get(b), top_t))
        .collect();
    let pubcount_curves = all
        .lists
        .iter()
        .map(|l| (l.method, pubcount_curve(l, top_t)))
        .collect();
    Ok(RankCompareReport {
        query_molecule: name,
        top_t,
        correlations,
        pubcount_curves,
        pagerank_top_jaccard: top_jaccard(
            all.get(RankMethod::PagerankNonnorm),
            all.get(RankMethod::PagerankNorm),
            top_t,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::countrank::{AuthorContribution, RankedEntry};
    use crate::graphstore::AuthorId;

    fn list(method: RankMethod, ids: &[u32]) -> RankedList {
        RankedList {
            method,
            query_molecule: MoleculeId(0),
            entries: ids
                .iter()
                .map(|&i| RankedEntry {
                    author: AuthorId(i),
                    author_name: format!("a{i}"),
                    score: 0.0,
                    contribution: AuthorContribution {
                        author: AuthorId(i),
                        author_name: format!("a{i}"),
                        per_molecule: Default::default(),
                        n_pc: 10 - i,
                        k_distinct: 1,
                        n_total: 10,
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn cross_rank_cases() {
        let a = list(RankMethod::CountNonnorm, &[0, 1, 2]);
        let b = list(RankMethod::CountNorm, &[1, 0, 2]);
        assert_eq!(cross_rank(&a, &b, 2).points, vec![(1, 2), (2, 1)]);
        let same = cross_rank(&a, &a, 10);
        assert_eq!(same.points, vec![(1, 1), (2, 2), (3, 3)]);
        let r = correlation("Q", &a, &a, 10);
        assert!((r.pearson_r.unwrap() - 1.0).abs() < 1e-12);
        let c = list(RankMethod::CountNorm, &[2]);
        let partial = cross_rank(&a, &c, 3);
        assert_eq!(partial.points, vec![(3, 1)]);
        assert_eq!(partial.missing, 2);
    }

    #[test]
    fn curve_and_jaccard() {
        let a = list(RankMethod::CountNonnorm, &[0, 1, 2]);
        assert_eq!(pubcount_curve(&a, 2), vec![(1, 10), (2, 9)]);
        assert!(pubcount_curve(&list(RankMethod::CountNonnorm, &[]), 5).is_empty());
        let b = list(RankMethod::CountNorm, &[2, 3, 4]);
        assert!((top_jaccard(&a, &b, 3) - 0.2).abs() < 1e-15);
    }
}
