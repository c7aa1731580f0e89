mod support;

use support::oracles::{fisher_enumerated, fisher_support, hypergeom_sf_enumerated, pagerank_dense, Pascal};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synergy_core::analysis::{fisher_exact, ContingencyTable};
use synergy_core::countrank::{hypergeom_sf, HypergeomQuery};
use synergy_core::pathrank::{eq2_weight, pagerank, CoauthorSubnetwork};
use synergy_core::{AuthorId, PagerankConfig};

#[test]
fn hypergeom_matches_enumeration() {
    let mut checked = 0;
    for n_pop in 0..=12u64 {
        for k_pop in 0..=n_pop {
            for n in 0..=n_pop {
                for k in 0..=n.min(k_pop) {
                    let q = HypergeomQuery {
                        population: n_pop,
                        successes: k_pop,
                        sample: n,
                        observed: k,
                    };
                    let got = hypergeom_sf(&q).unwrap();
                    let want = hypergeom_sf_enumerated(n_pop as u32, k_pop as u32, n as u32, k as u32);
                    assert!((got - want).abs() <= 1e-12, "{q:?}: {got} vs {want}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn fisher_matches_enumeration() {
    let pascal = Pascal::new(60);
    let mut checked = 0;
    for row1 in 1..=30u64 {
        for row2 in 1..=30u64 {
            let n = row1 + row2;
            for col1 in n.saturating_sub(30).max(1)..=30.min(n - 1) {
                for (b, want) in fisher_support(&pascal, row1, row2, col1) {
                    let a = col1 - b;
                    let t = ContingencyTable::new(a, b, row1 - a, row2 - b);
                    let got = fisher_exact(&t).unwrap();
                    assert!((got - want).abs() <= 1e-12, "{t:?}: {got} vs {want}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 100_000, "{checked}");
    assert!(fisher_exact(&ContingencyTable::new(0, 0, 3, 4)).is_err());
    assert!((fisher_enumerated(5, 0, 0, 5) - 2.0 / 252.0).abs() < 1e-15);
    assert!((fisher_exact(&ContingencyTable::new(5, 0, 0, 5)).unwrap() - 2.0 / 252.0).abs() < 1e-15);
}

fn random_network(rng: &mut ChaCha8Rng, normalized: bool) -> (usize, Vec<(usize, usize, f64)>) {
    let n = rng.gen_range(1..=10);
    let totals: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=40)).collect();
    let density: f64 = rng.gen_range(0.0..1.0);
    let mut edges = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if rng.gen_bool(density) {
                let m = rng.gen_range(1..=totals[x].min(totals[y]));
                let w = if normalized {
                    eq2_weight(m, totals[x], totals[y]).unwrap()
                } else {
                    m as f64
                };
                edges.push((x, y, w));
            }
        }
    }
    (n, edges)
}

#[test]
fn pagerank_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = PagerankConfig {
        tolerance: 1e-12,
        max_iterations: 10_000,
        ..Default::default()
    };
    for i in 0..200 {
        let (n, edges) = random_network(&mut rng, i % 2 == 1);
        let net = CoauthorSubnetwork::from_edges(
            (0..n as u32).map(AuthorId),
            edges.iter().map(|&(x, y, w)| (AuthorId(x as u32), AuthorId(y as u32), w)),
        );
        let out = pagerank(&net, &cfg).unwrap();
        assert!(out.converged);
        let want = pagerank_dense(n, &edges, cfg.damping);
        let sum: f64 = out.scores.iter().map(|s| s.1).sum();
        assert!((sum - 1.0).abs() <= 1e-10);
        for ((_, got), want) in out.scores.iter().zip(&want) {
            assert!((got - want).abs() <= 1e-8, "graph {i}: {got} vs {want}");
        }
    }
}

#[test]
fn path_of_three() {
    let (a, b, c) = (AuthorId(0), AuthorId(1), AuthorId(2));
    let net = CoauthorSubnetwork::from_edges([a, b, c], [(a, b, 1.0), (b, c, 1.0)]);
    let out = pagerank(&net, &PagerankConfig::default()).unwrap();
    let want = [0.256757, 0.486486, 0.256757];
    for ((_, got), want) in out.scores.iter().zip(want) {
        assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
    }
    let dense = pagerank_dense(3, &[(0, 1, 1.0), (1, 2, 1.0)], 0.85);
    assert!((dense[1] - 0.9 / 1.85).abs() < 1e-12);
}
