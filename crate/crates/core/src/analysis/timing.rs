//! Wall-clock comparison of the ranking methods.
//!
//! Numbers are machine-dependent. Each measured call runs on the calling
//! thread only.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::countrank::{contributions, rank_count, rank_hypergeometric, RankMethod};
use crate::graphstore::{MoleculeId, MultilayerGraph};
use crate::pathrank::{rank_pagerank, rank_pagerank_cached, PagerankConfig, PagerankStore, Variant};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    /// Method name; PageRank methods appear twice, suffixed `_cold` and
    /// `_cached`.
    pub method: String,
    pub mean_s: f64,
    pub var_s: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub rows: Vec<TimingRow>,
}

impl TimingReport {
    pub fn row(&self, method: &str) -> Option<&TimingRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn summarize(method: String, samples: &[f64]) -> TimingRow {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    TimingRow {
        method,
        mean_s: mean,
        var_s: var,
        samples: samples.len(),
    }
}

fn time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Time every method on every molecule `repetitions` times.
///
/// Cached PageRank timings use a store warmed once per molecule before
/// measuring, so they reflect lookup plus list assembly.
pub fn timing_harness(
    graph: &MultilayerGraph,
    molecules: &[MoleculeId],
    methods: &[RankMethod],
    repetitions: usize,
    cfg: &PagerankConfig,
) -> Result<TimingReport, AnalysisError> {
    if repetitions == 0 || molecules.is_empty() {
        return Ok(TimingReport::default());
    }
    let store = PagerankStore::in_memory();
    let mut rows = Vec::new();
    for &method in methods {
        let mut cold = Vec::new();
        let mut cached = Vec::new();
        for &m in molecules {
            for _ in 0..repetitions {
                let (res, secs) = match method {
                    RankMethod::Hypergeometric => time(|| rank_hypergeometric(graph, m).map(drop)),
                    RankMethod::CountNonnorm | RankMethod::CountNorm => time(|| {
                        contributions(graph, m)
                            .map(|c| drop(rank_count(m, c, method == RankMethod::CountNorm)))
                    }),
                    RankMethod::PagerankNonnorm | RankMethod::PagerankNorm => {
                        let v = Variant::of_method(method).expect("pagerank method");
                        time(|| rank_pagerank(graph, m, v, cfg).map(drop))
                    }
                };
                res?;
                cold.push(secs);
            }
            if let Some(v) = Variant::of_method(method) {
                rank_pagerank_cached(graph, m, v, cfg, &store)?;
                for _ in 0..repetitions {
                    let (res, secs) = time(|| rank_pagerank_cached(graph, m, v, cfg, &store));
                    debug_assert!(res.as_ref().map(|r| r.1).unwrap_or(true));
                    res?;
                    cached.push(secs);
                }
            }
        }
        if method.is_pagerank() {
            rows.push(summarize(format!("{method}_cold"), &cold));
            rows.push(summarize(format!("{method}_cached"), &cached));
        } else {
            rows.push(summarize(method.to_string(), &cold));
        }
    }
    Ok(TimingReport { rows })
}
