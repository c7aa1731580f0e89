use std::collections::BTreeSet;

use crate::graphstore::{MoleculeId, MultilayerGraph};
use crate::ingest::PublicationRecord;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchOptions {
    /// Scan the title in addition to the abstract and keywords.
    pub include_title: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            include_title: true,
        }
    }
}

/// Maximal runs of letters, digits and hyphens, lowercased, with leading and
/// trailing hyphens stripped.
pub fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !(c.is_alphanumeric() || c == '-'))
        .map(|t| t.trim_matches('-'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Push every contiguous run of hyphen-separated parts of `token` (up to
/// `max_parts` parts long) into `out`. `dap12-mediated` yields `dap12`,
/// `mediated` and `dap12-mediated`.
fn hyphen_spans(token: &str, max_parts: usize, out: &mut Vec<String>) {
    let parts: Vec<&str> = token.split('-').filter(|p| !p.is_empty()).collect();
    for start in 0..parts.len() {
        for end in start + 1..=parts.len().min(start + max_parts) {
            out.push(parts[start..end].join("-"));
        }
    }
}

/// Molecules whose canonical name or alias occurs as a whole token in the
/// record's title (optional), abstract or keywords.
pub fn match_mentions(
    rec: &PublicationRecord,
    graph: &MultilayerGraph,
    opts: &MatchOptions,
) -> BTreeSet<MoleculeId> {
    let index = graph.name_index();
    let max_parts = index
        .keys()
        .map(|k| k.split('-').filter(|p| !p.is_empty()).count())
        .max()
        .unwrap_or(1)
        .max(1);

    let mut texts: Vec<&str> = Vec::with_capacity(rec.keywords.len() + 2);
    if opts.include_title {
        texts.push(&rec.title);
    }
    texts.push(&rec.abstract_text);
    texts.extend(rec.keywords.iter().map(String::as_str));

    let mut found = BTreeSet::new();
    let mut candidates = Vec::new();
    for text in texts {
        for token in tokens(text) {
            candidates.clear();
            hyphen_spans(&token, max_parts, &mut candidates);
            for c in &candidates {
                if let Some(&id) = index.get(c) {
                    found.insert(id);
                }
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> MultilayerGraph {
        let mut g = MultilayerGraph::new();
        g.upsert_molecule("TREM2", ["TREM-2"]).unwrap();
        g.upsert_molecule("TYROBP", ["DAP12"]).unwrap();
        g
    }

    fn with_abstract(text: &str) -> PublicationRecord {
        PublicationRecord {
            pub_id: "1".into(),
            abstract_text: text.into(),
            ..Default::default()
        }
    }

    fn names(g: &MultilayerGraph, ids: &BTreeSet<MoleculeId>) -> Vec<String> {
        ids.iter()
            .map(|&m| g.molecule(m).unwrap().canonical_name.clone())
            .collect()
    }

    #[test]
    fn tokenizer_keeps_hyphens() {
        let t: Vec<_> = tokens("Dap12-mediated signaling; (TREM2), -x- 3'UTR").collect();
        assert_eq!(t, ["dap12-mediated", "signaling", "trem2", "x", "3", "utr"]);
    }

    #[test]
    fn direct_matches() {
        let g = graph();
        let m = match_mentions(&with_abstract("TREM2 binds TYROBP."), &g, &MatchOptions::default());
        assert_eq!(names(&g, &m), ["TREM2", "TYROBP"]);
    }

    #[test]
    fn whole_token_rule() {
        let g = graph();
        let m = match_mentions(&with_abstract("the TREM2x variant"), &g, &MatchOptions::default());
        assert!(m.is_empty());
    }

    #[test]
    fn hyphenated_tokens() {
        let g = graph();
        let m = match_mentions(
            &with_abstract("Dap12-mediated signaling"),
            &g,
            &MatchOptions::default(),
        );
        assert_eq!(names(&g, &m), ["TYROBP"]);
        let m = match_mentions(&with_abstract("a TREM-2-dependent"), &g, &MatchOptions::default());
        assert_eq!(names(&g, &m), ["TREM2"]);
    }

    #[test]
    fn title_and_keywords() {
        let g = graph();
        let rec = PublicationRecord {
            pub_id: "1".into(),
            title: "On TREM2".into(),
            keywords: vec!["dap12".into()],
            ..Default::default()
        };
        let on = match_mentions(&rec, &g, &MatchOptions::default());
        assert_eq!(names(&g, &on), ["TREM2", "TYROBP"]);
        let off = match_mentions(&rec, &g, &MatchOptions { include_title: false });
        assert_eq!(names(&g, &off), ["TYROBP"]);
    }
}
