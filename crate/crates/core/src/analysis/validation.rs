//! Co-author proximity experiment.
//!
//! If co-authors tend to study interacting molecules, pairs formed from the
//! interests of two co-authors should be network neighbors more often than
//! random molecule pairs. Randomness comes from `ChaCha8Rng` seeded with the
//! caller's `u64`, so a seed pins the result on every platform.

use std::collections::{BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{fisher_exact, odds_ratio, ContingencyTable, OddsRatio};
use super::AnalysisError;
use crate::graphstore::{AuthorId, MoleculeId, MultilayerGraph};

/// Molecules most often mentioned in the author's publications (by number of
/// publications), ties by canonical name.
pub fn author_interests(
    graph: &MultilayerGraph,
    a: AuthorId,
    top_m: usize,
) -> Result<Vec<MoleculeId>, AnalysisError> {
    let mut counts: HashMap<MoleculeId, u32> = HashMap::new();
    for &p in graph.author_publications(a)? {
        for &m in graph.mentioned_molecules(p)? {
            *counts.entry(m).or_default() += 1;
        }
    }
    let mut ranked = counts
        .into_iter()
        .map(|(m, n)| Ok((n, graph.molecule(m)?.canonical_name.as_str(), m)))
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    ranked.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(y.1)).then(x.2.cmp(&y.2)));
    Ok(ranked.into_iter().take(top_m).map(|(_, _, m)| m).collect())
}

/// Most frequent co-authors by shared publications, ties by name.
pub fn top_coauthors(
    graph: &MultilayerGraph,
    a: AuthorId,
    top_c: usize,
) -> Result<Vec<AuthorId>, AnalysisError> {
    let mut counts: HashMap<AuthorId, u32> = HashMap::new();
    for &p in graph.author_publications(a)? {
        for &b in graph.publication_authors(p)? {
            if b != a {
                *counts.entry(b).or_default() += 1;
            }
        }
    }
    let mut ranked = counts
        .into_iter()
        .map(|(b, n)| Ok((n, graph.author(b)?.canonical_name.as_str(), b)))
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    ranked.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(y.1)).then(x.2.cmp(&y.2)));
    Ok(ranked.into_iter().take(top_c).map(|(_, _, b)| b).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub n_molecules: usize,
    pub n_authors: usize,
    pub min_pubs: usize,
    pub top_m: usize,
    pub top_c: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            n_molecules: 500,
            n_authors: 250,
            min_pubs: 5,
            top_m: 5,
            top_c: 5,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub config: ValidationConfig,
    pub table: ContingencyTable,
    pub odds_ratio: OddsRatio,
    pub p_value: f64,
    pub molecules_sampled: usize,
    pub authors_sampled: usize,
    /// Author/co-author pairs that contributed molecule pairs.
    pub coauthor_pairs: usize,
    /// True when the graph was too small for the requested sample sizes.
    pub scaled_down: bool,
}

/// Random molecule sample, sorted by id.
fn sample_sorted<T: Copy + Ord>(rng: &mut ChaCha8Rng, pool: &[T], amount: usize) -> Vec<T> {
    let amount = amount.min(pool.len());
    let mut picked: Vec<T> = sample(rng, pool.len(), amount).into_iter().map(|i| pool[i]).collect();
    picked.sort();
    picked
}

/// Neighbor / non-neighbor counts over the unordered pairs of `sampled`.
pub fn null_counts(graph: &MultilayerGraph, sampled: &[MoleculeId]) -> (u64, u64) {
    let (mut non, mut nb) = (0, 0);
    for (i, &x) in sampled.iter().enumerate() {
        for &y in &sampled[i + 1..] {
            if graph.are_neighbors(x, y) {
                nb += 1;
            } else {
                non += 1;
            }
        }
    }
    (non, nb)
}

/// Neighbor / non-neighbor counts of the cross pairs of two interest lists
/// after dropping the molecules they share.
pub fn interest_pair_counts(graph: &MultilayerGraph, xs: &[MoleculeId], ys: &[MoleculeId]) -> (u64, u64) {
    let shared: BTreeSet<_> = xs.iter().filter(|m| ys.contains(m)).copied().collect();
    let (mut non, mut nb) = (0, 0);
    for x in xs.iter().filter(|m| !shared.contains(m)) {
        for y in ys.iter().filter(|m| !shared.contains(m)) {
            if graph.are_neighbors(*x, *y) {
                nb += 1;
            } else {
                non += 1;
            }
        }
    }
    (non, nb)
}

pub fn validation_experiment(
    graph: &MultilayerGraph,
    cfg: &ValidationConfig,
) -> Result<ValidationResult, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let molecules: Vec<MoleculeId> = graph.molecules().iter().map(|m| m.id).collect();
    let sampled_mols = sample_sorted(&mut rng, &molecules, cfg.n_molecules);
    let (random_non, random_nb) = null_counts(graph, &sampled_mols);

    let mut qualifying = Vec::new();
    for a in graph.authors() {
        if graph.n_total(a.id)? >= cfg.min_pubs {
            qualifying.push(a.id);
        }
    }
    let sampled_authors = sample_sorted(&mut rng, &qualifying, cfg.n_authors);

    let (mut co_non, mut co_nb, mut pairs) = (0, 0, 0);
    for &a in &sampled_authors {
        let mine = author_interests(graph, a, cfg.top_m)?;
        for b in top_coauthors(graph, a, cfg.top_c)? {
            let theirs = author_interests(graph, b, cfg.top_m)?;
            let (non, nb) = interest_pair_counts(graph, &mine, &theirs);
            if non + nb > 0 {
                pairs += 1;
            }
            co_non += non;
            co_nb += nb;
        }
    }

    let table = ContingencyTable::new(random_non, co_non, random_nb, co_nb);
    if random_non + random_nb == 0 || co_non + co_nb == 0 {
        return Err(AnalysisError::InsufficientData(format!(
            "no molecule pairs on one side of the table ({table:?})"
        )));
    }
    if random_nb + co_nb == 0 {
        return Err(AnalysisError::InsufficientData(
            "no neighbor pairs in either sample; odds ratio undefined".into(),
        ));
    }
    Ok(ValidationResult {
        config: *cfg,
        odds_ratio: odds_ratio(&table)?,
        p_value: fisher_exact(&table)?,
        table,
        molecules_sampled: sampled_mols.len(),
        authors_sampled: sampled_authors.len(),
        coauthor_pairs: pairs,
        scaled_down: sampled_mols.len() < cfg.n_molecules || sampled_authors.len() < cfg.n_authors,
    })
}
