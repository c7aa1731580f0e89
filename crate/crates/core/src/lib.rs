//! Multilayer collaboration network.
//!
//! Three layers are kept in one embedded store: molecules (with an
//! interaction network between them), publications that mention molecules,
//! and the authors of those publications. On top of the store sit the four
//! collaborator ranking methods (hypergeometric enrichment, non-normalized and
//! normalized publication counts, and weighted PageRank over a per-query
//! co-authorship subnetwork) plus the analysis routines used to compare them.

pub mod analysis;
pub mod countrank;
pub mod graphstore;
pub mod ingest;
pub mod pathrank;
pub mod synth;

pub use countrank::{AuthorContribution, RankMethod, RankedEntry, RankedList};
pub use graphstore::{AuthorId, GraphError, MoleculeId, MultilayerGraph, PubIdx, Snapshot};
pub use pathrank::{PagerankConfig, Variant};
