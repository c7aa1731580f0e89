//! Deterministic synthetic corpus.
//!
//! Molecules are grouped into modules with dense interactions inside a
//! module and sparse ones between modules. Authors belong to small labs
//! attached to a home module; productivity is heavy-tailed. Focused authors
//! publish almost only on their home module, generalists spread over all
//! modules. A share of publications mentions no catalog molecule at all.
//!
//! The same config (including the seed) always yields the same corpus.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graphstore::{GraphError, MultilayerGraph};
use crate::ingest::{ingest_records, write_corpus, AuthorRecord, IngestReport, MatchOptions, PublicationRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub modules: usize,
    pub module_size: usize,
    pub publications: usize,
    pub authors: usize,
    pub lab_size: usize,
    /// Interaction probability for a pair inside one module.
    pub p_intra: f64,
    /// Interaction probability for a pair spanning two modules.
    pub p_inter: f64,
    /// Share of authors that publish across all modules.
    pub generalist_share: f64,
    /// Share of publications without any molecule mention.
    pub unmatched_share: f64,
    /// Pareto tail index of author productivity (smaller = heavier tail).
    pub productivity_alpha: f64,
    /// Productivity multiplier for generalists.
    pub generalist_boost: f64,
    pub max_authors_per_pub: usize,
    /// Probability that a co-author is drawn from the lead author's lab.
    pub lab_coauthor_share: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            modules: 10,
            module_size: 10,
            publications: 2000,
            authors: 600,
            lab_size: 6,
            p_intra: 0.45,
            p_inter: 0.02,
            generalist_share: 0.5,
            unmatched_share: 0.1,
            productivity_alpha: 1.1,
            generalist_boost: 3.0,
            max_authors_per_pub: 6,
            lab_coauthor_share: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    /// `(canonical name, aliases)` in id order.
    pub catalog: Vec<(String, Vec<String>)>,
    pub interactions: Vec<(String, String)>,
    pub records: Vec<PublicationRecord>,
}

const FILLER: &[&str] = &[
    "signaling", "expression", "regulates", "pathway", "cells", "mice", "binding", "activity",
    "response", "inflammation", "neurons", "tissue", "receptor", "complex", "levels", "cohort",
];

const FIRST: &[&str] = &[
    "Ana", "Ben", "Chen", "Dara", "Eli", "Fatima", "Goran", "Hana", "Ivan", "Jun", "Kofi", "Lena",
    "Mei", "Nils", "Omar", "Priya", "Quinn", "Rosa", "Sven", "Tara", "Umar", "Vera", "Wei", "Xu",
    "Yara", "Zoe",
];

const LAST: &[&str] = &[
    "Abe", "Berg", "Costa", "Diaz", "Eng", "Fox", "Gupta", "Hall", "Ito", "Jain", "Kim", "Li",
    "Moreau", "Nagy", "Olsen", "Park", "Quist", "Rossi", "Sato", "Tan", "Ueda", "Vogel", "Wang",
    "Xie", "Yilmaz", "Zhang",
];

pub fn molecule_name(i: usize) -> String {
    format!("SYN{:03}", i + 1)
}

fn author_name(i: usize) -> String {
    // numeric suffix once the first/last combinations run out
    let first = FIRST[i % FIRST.len()];
    let last = LAST[(i / FIRST.len()) % LAST.len()];
    let round = i / (FIRST.len() * LAST.len());
    if round == 0 {
        format!("{first} {last}")
    } else {
        format!("{first} {last} {}", round + 1)
    }
}

struct Author {
    home: usize,
    lab: usize,
    generalist: bool,
    weight: f64,
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_mol = cfg.modules * cfg.module_size;
    let module_of = |m: usize| m / cfg.module_size;

    let catalog: Vec<(String, Vec<String>)> = (0..n_mol)
        .map(|i| {
            let aliases = if i % 4 == 0 {
                vec![format!("SYN-{:03}", i + 1)]
            } else {
                Vec::new()
            };
            (molecule_name(i), aliases)
        })
        .collect();

    let mut interactions = Vec::new();
    for a in 0..n_mol {
        for b in a + 1..n_mol {
            let p = if module_of(a) == module_of(b) { cfg.p_intra } else { cfg.p_inter };
            if rng.gen_bool(p) {
                interactions.push((molecule_name(a), molecule_name(b)));
            }
        }
    }

    let authors: Vec<Author> = (0..cfg.authors)
        .map(|i| {
            let lab = i / cfg.lab_size;
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            let generalist = rng.gen_bool(cfg.generalist_share);
            let boost = if generalist { cfg.generalist_boost } else { 1.0 };
            Author {
                home: lab % cfg.modules,
                lab,
                generalist,
                weight: boost * u.powf(-1.0 / cfg.productivity_alpha),
            }
        })
        .collect();
    let lead_dist = WeightedIndex::new(authors.iter().map(|a| a.weight)).expect("positive weights");
    let by_module: Vec<Vec<usize>> = (0..cfg.modules)
        .map(|m| (0..authors.len()).filter(|&i| authors[i].home == m).collect())
        .collect();
    let module_dists: Vec<WeightedIndex<f64>> = by_module
        .iter()
        .map(|ids| WeightedIndex::new(ids.iter().map(|&i| authors[i].weight)).expect("non-empty module"))
        .collect();

    let mut records = Vec::with_capacity(cfg.publications);
    for p in 0..cfg.publications {
        let lead = lead_dist.sample(&mut rng);
        let topic = if authors[lead].generalist || rng.gen_bool(0.1) {
            rng.gen_range(0..cfg.modules)
        } else {
            authors[lead].home
        };

        let mut team = vec![lead];
        let size = rng.gen_range(1..=cfg.max_authors_per_pub);
        let lab_first = authors[lead].lab * cfg.lab_size;
        let lab_last = (lab_first + cfg.lab_size).min(authors.len());
        let mut attempts = 0;
        while team.len() < size && attempts < 50 {
            attempts += 1;
            let c = if rng.gen_bool(cfg.lab_coauthor_share) {
                rng.gen_range(lab_first..lab_last)
            } else {
                by_module[topic][module_dists[topic].sample(&mut rng)]
            };
            if !team.contains(&c) {
                team.push(c);
            }
        }

        let mut mentioned: Vec<usize> = Vec::new();
        if !rng.gen_bool(cfg.unmatched_share) {
            let k = rng.gen_range(1..=3);
            let base = topic * cfg.module_size;
            let mut pool: Vec<usize> = (base..base + cfg.module_size).collect();
            pool.shuffle(&mut rng);
            mentioned.extend(pool.into_iter().take(k));
            if rng.gen_bool(0.1) {
                mentioned.push(rng.gen_range(0..n_mol));
                mentioned.dedup();
            }
        }
        let spell = |m: usize, rng: &mut ChaCha8Rng| -> String {
            match catalog[m].1.first() {
                Some(alias) if rng.gen_bool(0.3) => alias.clone(),
                _ => catalog[m].0.clone(),
            }
        };
        let mut words: Vec<String> = (0..12).map(|_| FILLER.choose(&mut rng).unwrap().to_string()).collect();
        for &m in &mentioned {
            let at = rng.gen_range(0..=words.len());
            let w = spell(m, &mut rng);
            words.insert(at, w);
        }
        let title = format!(
            "{} {}",
            FILLER.choose(&mut rng).unwrap(),
            FILLER.choose(&mut rng).unwrap()
        );
        records.push(PublicationRecord {
            pub_id: format!("{}", 30_000_000 + p),
            title,
            abstract_text: words.join(" ") + ".",
            keywords: Vec::new(),
            year: Some(rng.gen_range(1995..=2020)),
            authors: team
                .iter()
                .map(|&i| AuthorRecord {
                    name: author_name(i),
                    affiliation: Some(format!("Institute {}", authors[i].lab % 40 + 1)),
                })
                .collect(),
        });
    }

    SynthCorpus {
        catalog,
        interactions,
        records,
    }
}

impl SynthCorpus {
    pub fn build_graph(&self) -> Result<(MultilayerGraph, IngestReport), GraphError> {
        let mut g = MultilayerGraph::new();
        for (name, aliases) in &self.catalog {
            g.upsert_molecule(name, aliases)?;
        }
        for (a, b) in &self.interactions {
            let a = g.resolve_molecule(a).expect("catalog molecule");
            let b = g.resolve_molecule(b).expect("catalog molecule");
            g.add_interaction(a, b)?;
        }
        let report = ingest_records(&mut g, &self.records, &MatchOptions::default());
        Ok((g, report))
    }

    /// Write `catalog.tsv`, `interactions.tsv` and `corpus.jsonl` into `dir`.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut cat = BufWriter::new(File::create(dir.join("catalog.tsv"))?);
        for (name, aliases) in &self.catalog {
            writeln!(cat, "{name}\t{}", aliases.join(","))?;
        }
        cat.flush()?;
        let mut inter = BufWriter::new(File::create(dir.join("interactions.tsv"))?);
        for (a, b) in &self.interactions {
            writeln!(inter, "{a}\t{b}")?;
        }
        inter.flush()?;
        write_corpus(BufWriter::new(File::create(dir.join("corpus.jsonl"))?), &self.records)?;
        Ok(())
    }
}
