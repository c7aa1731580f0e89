//! Embedded multilayer property graph.
//!
//! Nodes live in three layers (molecules, publications, authors) and are
//! addressed by dense ids assigned in insertion order. Edges are tagged by
//! [`EdgeKind`]; the store keeps both directions of every cross-layer edge so
//! the traversals used by the ranking code are index lookups.
//!
//! The graph is mutated by a single writer during ingestion. Readers take a
//! [`Snapshot`] (an `Arc` of the frozen graph), which is `Send + Sync` and
//! can be shared by any number of threads.

pub(crate) mod snapshot;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PublicationRecord;

pub use snapshot::{load_snapshot, save_snapshot, FORMAT_VERSION, MAGIC};

/// Immutable, thread-shareable view of a fully ingested graph.
pub type Snapshot = Arc<MultilayerGraph>;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Molecule-layer node id.
    MoleculeId
);
id_type!(
    /// Author-layer node id.
    AuthorId
);
id_type!(
    /// Publication-layer node id. The source identifier (`pub_id`) is kept on
    /// the node itself.
    PubIdx
);

/// Layers currently populated. New layers (diseases, grants) get new variants.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[non_exhaustive]
pub enum Layer {
    Molecule,
    Publication,
    Author,
}

/// Edge tags. The snapshot format stores one section per tag.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[non_exhaustive]
pub enum EdgeKind {
    /// Undirected molecule-molecule association.
    Interacts,
    /// Publication -> molecule.
    Mentions,
    /// Author -> publication.
    Authored,
}

impl EdgeKind {
    pub fn endpoints(self) -> (Layer, Layer) {
        match self {
            EdgeKind::Interacts => (Layer::Molecule, Layer::Molecule),
            EdgeKind::Mentions => (Layer::Publication, Layer::Molecule),
            EdgeKind::Authored => (Layer::Author, Layer::Publication),
        }
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("name cannot be empty")]
    EmptyName,
    #[error("name '{name}' already belongs to molecule '{owner}'")]
    AliasConflict { name: String, owner: String },
    #[error("self-loop on molecule {0}")]
    SelfLoop(MoleculeId),
    #[error("unknown {layer:?} node {id}")]
    UnknownNode { layer: Layer, id: String },
    #[error("publication {pub_id} already stored with a different title")]
    DuplicateConflict { pub_id: String },
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("format version mismatch: expected {expected}, found {found}")]
    FormatVersionMismatch { expected: String, found: String },
    #[error("checksum mismatch (file truncated or corrupted)")]
    ChecksumMismatch,
    #[error("malformed snapshot: {0}")]
    Corrupt(String),
}

impl GraphError {
    fn unknown(layer: Layer, id: impl fmt::Display) -> Self {
        GraphError::UnknownNode {
            layer,
            id: id.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoleculeNode {
    pub id: MoleculeId,
    pub canonical_name: String,
    pub aliases: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationNode {
    pub idx: PubIdx,
    pub pub_id: String,
    pub title: String,
    pub abstract_text: String,
    pub keywords: Vec<String>,
    pub year: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorNode {
    pub id: AuthorId,
    pub canonical_name: String,
    pub affiliation: Option<String>,
}

/// Result of [`MultilayerGraph::upsert_publication`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PublicationUpsert {
    pub idx: PubIdx,
    /// False when the record was already present (no-op).
    pub created: bool,
    pub authors_created: usize,
}

/// Case-folded lookup key for molecule names and aliases.
pub fn name_key(name: &str) -> String {
    name.trim().to_lowercase()
}

/// Author identity key: whitespace-normalized, case-folded full name.
pub fn author_key(name: &str) -> String {
    normalize_whitespace(name).to_lowercase()
}

fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub const MIN_YEAR: i32 = 1800;
pub const MAX_YEAR: i32 = 2100;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultilayerGraph {
    molecules: Vec<MoleculeNode>,
    publications: Vec<PublicationNode>,
    authors: Vec<AuthorNode>,
    interacts: Vec<BTreeSet<MoleculeId>>,
    mentions_by_pub: Vec<BTreeSet<MoleculeId>>,
    mentions_by_mol: Vec<BTreeSet<PubIdx>>,
    pubs_by_author: Vec<BTreeSet<PubIdx>>,
    // byline order, deduplicated
    authors_by_pub: Vec<Vec<AuthorId>>,
    name_index: HashMap<String, MoleculeId>,
    pub_index: HashMap<String, PubIdx>,
    author_index: HashMap<String, AuthorId>,
    revision: u64,
}

impl MultilayerGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Freeze the graph into a shareable read-only view.
    pub fn into_snapshot(self) -> Snapshot {
        Arc::new(self)
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    fn bump(&mut self) {
        self.revision += 1;
    }

    // ---- molecule layer ----

    /// Insert a molecule or merge aliases into an existing one with the same
    /// (case-folded) canonical name.
    pub fn upsert_molecule<I, S>(&mut self, name: &str, aliases: I) -> Result<MoleculeId, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.trim();
        if name.is_empty() {
            return Err(GraphError::EmptyName);
        }
        let key = name_key(name);
        let existing = match self.name_index.get(&key) {
            Some(&id) if name_key(&self.molecules[id.index()].canonical_name) == key => Some(id),
            Some(&id) => {
                return Err(GraphError::AliasConflict {
                    name: name.to_string(),
                    owner: self.molecules[id.index()].canonical_name.clone(),
                })
            }
            None => None,
        };

        // validate every alias before touching anything
        let mut new_aliases: Vec<(String, String)> = Vec::new();
        for alias in aliases {
            let alias = alias.as_ref().trim();
            if alias.is_empty() {
                continue;
            }
            let akey = name_key(alias);
            if akey == key || new_aliases.iter().any(|(k, _)| *k == akey) {
                continue;
            }
            match self.name_index.get(&akey) {
                Some(&owner) if Some(owner) == existing => continue,
                Some(&owner) => {
                    return Err(GraphError::AliasConflict {
                        name: alias.to_string(),
                        owner: self.molecules[owner.index()].canonical_name.clone(),
                    })
                }
                None => new_aliases.push((akey, alias.to_string())),
            }
        }

        let id = match existing {
            Some(id) => {
                if new_aliases.is_empty() {
                    return Ok(id);
                }
                id
            }
            None => {
                let id = MoleculeId(self.molecules.len() as u32);
                self.molecules.push(MoleculeNode {
                    id,
                    canonical_name: name.to_string(),
                    aliases: BTreeSet::new(),
                });
                self.interacts.push(BTreeSet::new());
                self.mentions_by_mol.push(BTreeSet::new());
                self.name_index.insert(key, id);
                id
            }
        };
        for (akey, alias) in new_aliases {
            self.name_index.insert(akey, id);
            self.molecules[id.index()].aliases.insert(alias);
        }
        self.bump();
        Ok(id)
    }

    /// Resolve a canonical name or alias, case-insensitively.
    pub fn resolve_molecule(&self, name: &str) -> Option<MoleculeId> {
        self.name_index.get(&name_key(name)).copied()
    }

    /// The case-folded name index (canonical names and aliases).
    pub fn name_index(&self) -> &HashMap<String, MoleculeId> {
        &self.name_index
    }

    pub fn molecule(&self, id: MoleculeId) -> Result<&MoleculeNode, GraphError> {
        self.molecules
            .get(id.index())
            .ok_or_else(|| GraphError::unknown(Layer::Molecule, id))
    }

    pub fn molecules(&self) -> &[MoleculeNode] {
        &self.molecules
    }

    /// Add the undirected edge `{a, b}`. Returns false if it already existed.
    pub fn add_interaction(&mut self, a: MoleculeId, b: MoleculeId) -> Result<bool, GraphError> {
        self.molecule(a)?;
        self.molecule(b)?;
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if !self.interacts[a.index()].insert(b) {
            return Ok(false);
        }
        self.interacts[b.index()].insert(a);
        self.bump();
        Ok(true)
    }

    pub fn interaction_neighbors(&self, m: MoleculeId) -> Result<&BTreeSet<MoleculeId>, GraphError> {
        self.molecule(m)?;
        Ok(&self.interacts[m.index()])
    }

    pub fn are_neighbors(&self, a: MoleculeId, b: MoleculeId) -> bool {
        self.interacts
            .get(a.index())
            .is_some_and(|n| n.contains(&b))
    }

    /// One-hop interaction neighbors of `m`, optionally including `m`.
    pub fn related_molecules(
        &self,
        m: MoleculeId,
        include_self: bool,
    ) -> Result<BTreeSet<MoleculeId>, GraphError> {
        let mut related = self.interaction_neighbors(m)?.clone();
        if include_self {
            related.insert(m);
        }
        Ok(related)
    }

    // ---- publication & author layers ----

    /// Insert a publication and its authors.
    ///
    /// Identical `pub_id` with identical title is a no-op; a differing title
    /// is a [`GraphError::DuplicateConflict`].
    pub fn upsert_publication(
        &mut self,
        rec: &PublicationRecord,
    ) -> Result<PublicationUpsert, GraphError> {
        let pub_id = rec.pub_id.trim();
        if pub_id.is_empty() {
            return Err(GraphError::InvalidRecord("empty pub_id".into()));
        }
        if let Some(&idx) = self.pub_index.get(pub_id) {
            if self.publications[idx.index()].title == rec.title {
                return Ok(PublicationUpsert {
                    idx,
                    created: false,
                    authors_created: 0,
                });
            }
            return Err(GraphError::DuplicateConflict {
                pub_id: pub_id.to_string(),
            });
        }
        if let Some(year) = rec.year {
            if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
                return Err(GraphError::InvalidRecord(format!("year {year} out of range")));
            }
        }
        let authors: Vec<_> = rec
            .authors
            .iter()
            .filter(|a| !a.name.trim().is_empty())
            .collect();
        if authors.is_empty() {
            return Err(GraphError::InvalidRecord("no authors".into()));
        }

        let idx = PubIdx(self.publications.len() as u32);
        self.publications.push(PublicationNode {
            idx,
            pub_id: pub_id.to_string(),
            title: rec.title.clone(),
            abstract_text: rec.abstract_text.clone(),
            keywords: rec.keywords.clone(),
            year: rec.year,
        });
        self.pub_index.insert(pub_id.to_string(), idx);
        self.mentions_by_pub.push(BTreeSet::new());
        self.authors_by_pub.push(Vec::new());

        let mut authors_created = 0;
        for author in authors {
            let key = author_key(&author.name);
            let aid = match self.author_index.get(&key) {
                Some(&aid) => aid,
                None => {
                    let aid = AuthorId(self.authors.len() as u32);
                    self.authors.push(AuthorNode {
                        id: aid,
                        canonical_name: normalize_whitespace(&author.name),
                        affiliation: None,
                    });
                    self.pubs_by_author.push(BTreeSet::new());
                    self.author_index.insert(key, aid);
                    authors_created += 1;
                    aid
                }
            };
            let node = &mut self.authors[aid.index()];
            if node.affiliation.is_none() {
                node.affiliation = author
                    .affiliation
                    .as_deref()
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from);
            }
            if self.pubs_by_author[aid.index()].insert(idx) {
                self.authors_by_pub[idx.index()].push(aid);
            }
        }
        self.bump();
        Ok(PublicationUpsert {
            idx,
            created: true,
            authors_created,
        })
    }

    /// Add a publication -> molecule mention. Returns false if already present.
    pub fn add_mention(&mut self, p: PubIdx, m: MoleculeId) -> Result<bool, GraphError> {
        self.publication(p)?;
        self.molecule(m)?;
        if !self.mentions_by_pub[p.index()].insert(m) {
            return Ok(false);
        }
        self.mentions_by_mol[m.index()].insert(p);
        self.bump();
        Ok(true)
    }

    pub fn publication(&self, p: PubIdx) -> Result<&PublicationNode, GraphError> {
        self.publications
            .get(p.index())
            .ok_or_else(|| GraphError::unknown(Layer::Publication, p))
    }

    pub fn publication_by_id(&self, pub_id: &str) -> Option<PubIdx> {
        self.pub_index.get(pub_id.trim()).copied()
    }

    pub fn publications(&self) -> &[PublicationNode] {
        &self.publications
    }

    /// Molecules mentioned by a publication.
    pub fn mentioned_molecules(&self, p: PubIdx) -> Result<&BTreeSet<MoleculeId>, GraphError> {
        self.publication(p)?;
        Ok(&self.mentions_by_pub[p.index()])
    }

    /// Publications mentioning a single molecule.
    pub fn mentions_of(&self, m: MoleculeId) -> Result<&BTreeSet<PubIdx>, GraphError> {
        self.molecule(m)?;
        Ok(&self.mentions_by_mol[m.index()])
    }

    /// Union of publications mentioning any molecule in `ms`.
    pub fn publications_mentioning<'a, I>(&self, ms: I) -> Result<BTreeSet<PubIdx>, GraphError>
    where
        I: IntoIterator<Item = &'a MoleculeId>,
    {
        let mut out = BTreeSet::new();
        for &m in ms {
            out.extend(self.mentions_of(m)?.iter().copied());
        }
        Ok(out)
    }

    /// Authors of a publication in byline order.
    pub fn publication_authors(&self, p: PubIdx) -> Result<&[AuthorId], GraphError> {
        self.publication(p)?;
        Ok(&self.authors_by_pub[p.index()])
    }

    pub fn author(&self, a: AuthorId) -> Result<&AuthorNode, GraphError> {
        self.authors
            .get(a.index())
            .ok_or_else(|| GraphError::unknown(Layer::Author, a))
    }

    pub fn author_by_name(&self, name: &str) -> Option<AuthorId> {
        self.author_index.get(&author_key(name)).copied()
    }

    pub fn authors(&self) -> &[AuthorNode] {
        &self.authors
    }

    pub fn author_publications(&self, a: AuthorId) -> Result<&BTreeSet<PubIdx>, GraphError> {
        self.author(a)?;
        Ok(&self.pubs_by_author[a.index()])
    }

    /// Total publication count of an author (`n_TOTAL`, `N_x`).
    pub fn n_total(&self, a: AuthorId) -> Result<usize, GraphError> {
        Ok(self.author_publications(a)?.len())
    }

    // ---- counts ----

    pub fn molecule_count(&self) -> usize {
        self.molecules.len()
    }

    pub fn publication_count(&self) -> usize {
        self.publications.len()
    }

    pub fn author_count(&self) -> usize {
        self.authors.len()
    }

    pub fn edge_count(&self, kind: EdgeKind) -> usize {
        match kind {
            EdgeKind::Interacts => self.interacts.iter().map(BTreeSet::len).sum::<usize>() / 2,
            EdgeKind::Mentions => self.mentions_by_pub.iter().map(BTreeSet::len).sum(),
            EdgeKind::Authored => self.authors_by_pub.iter().map(Vec::len).sum(),
        }
    }

    pub fn counts(&self) -> GraphCounts {
        GraphCounts {
            molecules: self.molecule_count(),
            publications: self.publication_count(),
            authors: self.author_count(),
            interactions: self.edge_count(EdgeKind::Interacts),
            mentions: self.edge_count(EdgeKind::Mentions),
            authored: self.edge_count(EdgeKind::Authored),
        }
    }

    /// Interaction edges as `(a, b)` with `a < b`, in ascending order.
    pub fn interaction_edges(&self) -> impl Iterator<Item = (MoleculeId, MoleculeId)> + '_ {
        self.interacts.iter().enumerate().flat_map(|(a, ns)| {
            let a = MoleculeId(a as u32);
            ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b))
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCounts {
    pub molecules: usize,
    pub publications: usize,
    pub authors: usize,
    pub interactions: usize,
    pub mentions: usize,
    pub authored: usize,
}
