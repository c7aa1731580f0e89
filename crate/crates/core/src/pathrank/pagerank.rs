use std::collections::BTreeMap;

use crate::countrank::RankError;
use crate::graphstore::AuthorId;

use super::{CoauthorSubnetwork, PagerankConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct PagerankOutcome {
    /// Scores in node (author id) order; they sum to 1.
    pub scores: Vec<(AuthorId, f64)>,
    pub iterations: usize,
    /// False when `max_iterations` was hit before the tolerance was reached.
    pub converged: bool,
}

/// Weighted PageRank with uniform teleport.
///
/// A walker at `u` moves to neighbor `v` with probability
/// `w(u, v) / sum_w(u)`; with probability `1 - damping` it teleports to a
/// uniformly chosen node. Nodes without (positive-weight) edges hand their
/// whole mass out uniformly.
pub fn pagerank(net: &CoauthorSubnetwork, cfg: &PagerankConfig) -> Result<PagerankOutcome, RankError> {
    pagerank_personalized(net, cfg, None)
}

/// As [`pagerank`], but teleporting according to `personalization` (weights
/// are normalized; authors missing from the map get zero). Dangling mass is
/// still spread uniformly.
pub fn pagerank_personalized(
    net: &CoauthorSubnetwork,
    cfg: &PagerankConfig,
    personalization: Option<&BTreeMap<AuthorId, f64>>,
) -> Result<PagerankOutcome, RankError> {
    cfg.validate()?;
    let n = net.nodes.len();
    if n == 0 {
        return Err(RankError::EmptyNetwork);
    }
    let index: BTreeMap<AuthorId, usize> = net.nodes.iter().enumerate().map(|(i, &a)| (a, i)).collect();

    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in &net.edges {
        if e.x == e.y {
            return Err(RankError::InvalidParams(format!("self-loop on author {}", e.x)));
        }
        if !(e.weight >= 0.0 && e.weight.is_finite()) {
            return Err(RankError::InvalidParams(format!("bad edge weight {}", e.weight)));
        }
        let (Some(&i), Some(&j)) = (index.get(&e.x), index.get(&e.y)) else {
            return Err(RankError::InvalidParams(format!(
                "edge ({}, {}) has an endpoint outside the node set",
                e.x, e.y
            )));
        };
        if e.weight > 0.0 {
            adj[i].push((j, e.weight));
            adj[j].push((i, e.weight));
        }
    }
    let out_weight: Vec<f64> = adj.iter().map(|ns| ns.iter().map(|&(_, w)| w).sum()).collect();

    let teleport: Vec<f64> = match personalization {
        None => vec![1.0 / n as f64; n],
        Some(p) => {
            let raw: Vec<f64> = net
                .nodes
                .iter()
                .map(|a| p.get(a).copied().unwrap_or(0.0))
                .collect();
            let total: f64 = raw.iter().sum();
            if !(total > 0.0) || raw.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(RankError::InvalidParams(
                    "personalization must be non-negative with positive mass".into(),
                ));
            }
            raw.into_iter().map(|v| v / total).collect()
        }
    };

    let d = cfg.damping;
    let uniform = 1.0 / n as f64;
    let mut x = vec![uniform; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let dangling: f64 = (0..n).filter(|&u| out_weight[u] == 0.0).map(|u| x[u]).sum();
        for (v, slot) in next.iter_mut().enumerate() {
            *slot = (1.0 - d) * teleport[v] + d * dangling * uniform;
        }
        for u in 0..n {
            if out_weight[u] > 0.0 {
                let share = d * x[u] / out_weight[u];
                for &(v, w) in &adj[u] {
                    next[v] += share * w;
                }
            }
        }
        let change: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if change < cfg.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        tracing::warn!(iterations, "pagerank did not converge");
    }
    let total: f64 = x.iter().sum();
    Ok(PagerankOutcome {
        scores: net.nodes.iter().zip(x).map(|(&a, s)| (a, s / total)).collect(),
        iterations,
        converged,
    })
}
