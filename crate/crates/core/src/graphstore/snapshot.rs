//! `.mlg` snapshot files.
//!
//! Layout (all integers little-endian, strings are `u32` byte length followed
//! by UTF-8 bytes):
//!
//! ```text
//! "MLG1"            4-byte magic
//! u32               format version (currently 1)
//! u64               graph revision
//! section*          u8 tag, u64 payload length, u64 record count, payload
//! [u8; 32]          SHA-256 of every preceding byte
//! ```
//!
//! Sections appear in this order: MOLECULES (1), INTERACTIONS (2),
//! PUBLICATIONS (3), AUTHORS (4), MENTIONS (5), AUTHORED (6). Readers skip
//! sections with unknown tags, so new layers can be added without breaking
//! older files. Node ids are the record positions inside their section.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{AuthorId, GraphError, MoleculeId, MultilayerGraph, PubIdx};
use crate::ingest::{AuthorRecord, PublicationRecord};

pub const MAGIC: &[u8; 4] = b"MLG1";
pub const FORMAT_VERSION: u32 = 1;

const TAG_MOLECULES: u8 = 1;
const TAG_INTERACTIONS: u8 = 2;
const TAG_PUBLICATIONS: u8 = 3;
const TAG_AUTHORS: u8 = 4;
const TAG_MENTIONS: u8 = 5;
const TAG_AUTHORED: u8 = 6;

const CHECKSUM_LEN: usize = 32;

/// Binary writer shared by the snapshot and the PageRank store.
#[derive(Default)]
pub(crate) struct Encoder {
    pub(crate) buf: Vec<u8>,
}

impl Encoder {
    pub(crate) fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub(crate) fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub(crate) fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    pub(crate) fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn section(&mut self, tag: u8, count: usize, body: Encoder) {
        self.u8(tag);
        self.u64(body.buf.len() as u64);
        self.u64(count as u64);
        self.buf.extend_from_slice(&body.buf);
    }

    /// Append the checksum trailer and write the file via a temp rename.
    pub(crate) fn finish_to(mut self, path: &Path) -> std::io::Result<()> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.buf)?;
            f.sync_all()?;
        }
        fs::rename(tmp, path)
    }
}

pub(crate) struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], GraphError> {
        if self.buf.len() - self.pos < n {
            return Err(GraphError::Corrupt("unexpected end of data".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    pub(crate) fn u8(&mut self) -> Result<u8, GraphError> {
        Ok(self.take(1)?[0])
    }
    pub(crate) fn u32(&mut self) -> Result<u32, GraphError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub(crate) fn u64(&mut self) -> Result<u64, GraphError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub(crate) fn i32(&mut self) -> Result<i32, GraphError> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub(crate) fn f64(&mut self) -> Result<f64, GraphError> {
        Ok(f64::from_bits(self.u64()?))
    }
    pub(crate) fn str(&mut self) -> Result<String, GraphError> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| GraphError::Corrupt("invalid utf-8".into()))
    }
}

/// Read a file, check magic, version and trailing checksum, and return the
/// payload after the 8-byte magic+version header.
pub(crate) fn read_verified(
    path: &Path,
    magic: &[u8; 4],
    version: u32,
) -> Result<Vec<u8>, GraphError> {
    let data = fs::read(path)?;
    if data.len() >= 4 && &data[..4] != magic {
        return Err(GraphError::FormatVersionMismatch {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&data[..4]).into_owned(),
        });
    }
    if data.len() < 8 + CHECKSUM_LEN {
        return Err(GraphError::ChecksumMismatch);
    }
    let found = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if found != version {
        return Err(GraphError::FormatVersionMismatch {
            expected: version.to_string(),
            found: found.to_string(),
        });
    }
    let (body, digest) = data.split_at(data.len() - CHECKSUM_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(GraphError::ChecksumMismatch);
    }
    Ok(body[8..].to_vec())
}

pub fn save_snapshot(graph: &MultilayerGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut out = Encoder::default();
    out.buf.extend_from_slice(MAGIC);
    out.u32(FORMAT_VERSION);
    out.u64(graph.revision);

    let mut body = Encoder::default();
    for m in &graph.molecules {
        body.str(&m.canonical_name);
        body.u32(m.aliases.len() as u32);
        for a in &m.aliases {
            body.str(a);
        }
    }
    out.section(TAG_MOLECULES, graph.molecules.len(), body);

    let mut body = Encoder::default();
    let mut n = 0;
    for (a, b) in graph.interaction_edges() {
        body.u32(a.0);
        body.u32(b.0);
        n += 1;
    }
    out.section(TAG_INTERACTIONS, n, body);

    let mut body = Encoder::default();
    for p in &graph.publications {
        body.str(&p.pub_id);
        body.str(&p.title);
        body.str(&p.abstract_text);
        body.u32(p.keywords.len() as u32);
        for k in &p.keywords {
            body.str(k);
        }
        match p.year {
            Some(y) => {
                body.u8(1);
                body.i32(y);
            }
            None => body.u8(0),
        }
    }
    out.section(TAG_PUBLICATIONS, graph.publications.len(), body);

    let mut body = Encoder::default();
    for a in &graph.authors {
        body.str(&a.canonical_name);
        match &a.affiliation {
            Some(aff) => {
                body.u8(1);
                body.str(aff);
            }
            None => body.u8(0),
        }
    }
    out.section(TAG_AUTHORS, graph.authors.len(), body);

    let mut body = Encoder::default();
    let mut n = 0;
    for (p, ms) in graph.mentions_by_pub.iter().enumerate() {
        for m in ms {
            body.u32(p as u32);
            body.u32(m.0);
            n += 1;
        }
    }
    out.section(TAG_MENTIONS, n, body);

    // byline order is preserved: pairs are written per publication
    let mut body = Encoder::default();
    let mut n = 0;
    for (p, authors) in graph.authors_by_pub.iter().enumerate() {
        for a in authors {
            body.u32(a.0);
            body.u32(p as u32);
            n += 1;
        }
    }
    out.section(TAG_AUTHORED, n, body);

    out.finish_to(path.as_ref())?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<MultilayerGraph, GraphError> {
    let payload = read_verified(path.as_ref(), MAGIC, FORMAT_VERSION)?;
    let mut d = Decoder::new(&payload);
    let revision = d.u64()?;

    let mut g = MultilayerGraph::new();
    let mut interactions = Vec::new();
    let mut mentions = Vec::new();
    let mut authored = Vec::new();
    let mut publications = Vec::new();
    let mut authors: Vec<(String, Option<String>)> = Vec::new();

    while !d.is_empty() {
        let tag = d.u8()?;
        let len = d.u64()? as usize;
        let count = d.u64()? as usize;
        let mut s = Decoder::new(d.take(len)?);
        match tag {
            TAG_MOLECULES => {
                for _ in 0..count {
                    let name = s.str()?;
                    let n = s.u32()?;
                    let aliases = (0..n).map(|_| s.str()).collect::<Result<Vec<_>, _>>()?;
                    let id = g.upsert_molecule(&name, aliases)?;
                    if id.index() + 1 != g.molecules.len() {
                        return Err(GraphError::Corrupt(format!("duplicate molecule {name}")));
                    }
                }
            }
            TAG_INTERACTIONS => {
                for _ in 0..count {
                    interactions.push((MoleculeId(s.u32()?), MoleculeId(s.u32()?)));
                }
            }
            TAG_PUBLICATIONS => {
                for _ in 0..count {
                    let pub_id = s.str()?;
                    let title = s.str()?;
                    let abstract_text = s.str()?;
                    let n = s.u32()?;
                    let keywords = (0..n).map(|_| s.str()).collect::<Result<Vec<_>, _>>()?;
                    let year = match s.u8()? {
                        0 => None,
                        _ => Some(s.i32()?),
                    };
                    publications.push(PublicationRecord {
                        pub_id,
                        title,
                        abstract_text,
                        keywords,
                        year,
                        authors: Vec::new(),
                    });
                }
            }
            TAG_AUTHORS => {
                for _ in 0..count {
                    let name = s.str()?;
                    let aff = match s.u8()? {
                        0 => None,
                        _ => Some(s.str()?),
                    };
                    authors.push((name, aff));
                }
            }
            TAG_MENTIONS => {
                for _ in 0..count {
                    mentions.push((PubIdx(s.u32()?), MoleculeId(s.u32()?)));
                }
            }
            TAG_AUTHORED => {
                for _ in 0..count {
                    authored.push((AuthorId(s.u32()?), PubIdx(s.u32()?)));
                }
            }
            _ => {}
        }
    }

    for (a, b) in interactions {
        g.add_interaction(a, b)?;
    }

    // Rebuild publications with their bylines; replaying authors in id order
    // first keeps author ids identical to the saved ones.
    let mut bylines: Vec<Vec<AuthorId>> = vec![Vec::new(); publications.len()];
    for (a, p) in authored {
        if a.index() >= authors.len() {
            return Err(GraphError::Corrupt(format!("authored edge to unknown author {a}")));
        }
        bylines
            .get_mut(p.index())
            .ok_or_else(|| GraphError::Corrupt(format!("authored edge to unknown pub {p}")))?
            .push(a);
    }
    rebuild_authors(&mut g, &authors)?;
    for (rec, byline) in publications.into_iter().zip(&bylines) {
        let rec = PublicationRecord {
            authors: byline
                .iter()
                .map(|a| AuthorRecord {
                    name: authors[a.index()].0.clone(),
                    affiliation: None,
                })
                .collect(),
            ..rec
        };
        let out = g.upsert_publication(&rec)?;
        if !out.created {
            return Err(GraphError::Corrupt(format!("duplicate publication {}", rec.pub_id)));
        }
    }
    for (p, m) in mentions {
        g.add_mention(p, m)?;
    }
    if g.pubs_by_author.iter().any(BTreeSet::is_empty) {
        return Err(GraphError::Corrupt("author without publications".into()));
    }
    g.revision = revision;
    Ok(g)
}

fn rebuild_authors(
    g: &mut MultilayerGraph,
    authors: &[(String, Option<String>)],
) -> Result<(), GraphError> {
    use super::{author_key, AuthorNode};
    for (i, (name, aff)) in authors.iter().enumerate() {
        let id = AuthorId(i as u32);
        if g.author_index.insert(author_key(name), id).is_some() {
            return Err(GraphError::Corrupt(format!("duplicate author {name}")));
        }
        g.authors.push(AuthorNode {
            id,
            canonical_name: name.clone(),
            affiliation: aff.clone(),
        });
        g.pubs_by_author.push(BTreeSet::new());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.mlg");
        let g = MultilayerGraph::new();
        save_snapshot(&g, &path).unwrap();
        assert_eq!(load_snapshot(&path).unwrap(), g);
    }

    #[test]
    fn truncated_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.mlg");
        let mut g = MultilayerGraph::new();
        g.upsert_molecule("TREM2", ["TREM-2"]).unwrap();
        save_snapshot(&g, &path).unwrap();
        let data = fs::read(&path).unwrap();

        fs::write(&path, &data[..data.len() - 5]).unwrap();
        assert!(matches!(load_snapshot(&path), Err(GraphError::ChecksumMismatch)));
        fs::write(&path, &data[..6]).unwrap();
        assert!(matches!(load_snapshot(&path), Err(GraphError::ChecksumMismatch)));

        let mut bad = data.clone();
        bad[4] = 9;
        fs::write(&path, &bad).unwrap();
        assert!(matches!(
            load_snapshot(&path),
            Err(GraphError::FormatVersionMismatch { .. })
        ));
        fs::write(&path, b"PK\x03\x04whatever").unwrap();
        assert!(matches!(
            load_snapshot(&path),
            Err(GraphError::FormatVersionMismatch { .. })
        ));
        assert!(matches!(
            load_snapshot(dir.path().join("missing.mlg")),
            Err(GraphError::Io(_))
        ));
    }
}
