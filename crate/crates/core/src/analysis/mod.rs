//! Method comparison and validation routines, with CSV/JSON emission.

mod compare;
mod report;
pub mod stats;
mod timing;
mod validation;

use thiserror::Error;

use crate::countrank::RankError;
use crate::graphstore::GraphError;

pub use compare::{
    correlation, cross_rank, pubcount_curve, rank_compare, top_jaccard, CorrelationReport, CrossRank,
    MethodRankings, RankCompareReport, COMPARED_PAIRS,
};
pub use report::{write_rank_compare, write_timing, write_validation};
pub use stats::{chi_square_p, fisher_exact, odds_ratio, pearson, ContingencyTable, OddsRatio};
pub use timing::{timing_harness, TimingReport, TimingRow};
pub use validation::{
    author_interests, interest_pair_counts, null_counts, top_coauthors, validation_experiment,
    ValidationConfig, ValidationResult,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("invalid contingency table: {0}")]
    InvalidTable(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
