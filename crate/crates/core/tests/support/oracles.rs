//! Reference implementations used to check the production code. They favor
//! obviousness over speed and share no code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// P(X >= k) by enumerating every n-subset of an N-set whose first K items
/// are successes.
pub fn hypergeom_sf_enumerated(n_pop: u32, k_pop: u32, n: u32, k: u32) -> f64 {
    assert!(n_pop <= 16);
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n_pop) {
        if mask.count_ones() != n {
            continue;
        }
        total += 1;
        let successes = (mask & ((1u32 << k_pop) - 1)).count_ones();
        if successes >= k {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// Binomial coefficients `C(n, k)` for `n <= max`, by Pascal's rule.
pub struct Pascal(Vec<Vec<BigUint>>);

impl Pascal {
    pub fn new(max: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for n in 1..=max {
            let prev = &rows[n - 1];
            let mut row = vec![BigUint::one(); n + 1];
            for k in 1..n {
                row[k] = &prev[k - 1] + &prev[k];
            }
            rows.push(row);
        }
        Self(rows)
    }

    pub fn choose(&self, n: u64, k: u64) -> BigUint {
        if k > n {
            BigUint::zero()
        } else {
            self.0[n as usize][k as usize].clone()
        }
    }
}

/// Two-sided Fisher p-values for every table with row margins `row1`
/// (random) and `row2` (coauthor) and first-column margin `col1`, keyed by
/// the coauthor/non-neighbor cell `b`. Exact rational arithmetic; a table
/// counts toward another's p-value when its point probability is not
/// larger.
pub fn fisher_support(pascal: &Pascal, row1: u64, row2: u64, col1: u64) -> Vec<(u64, f64)> {
    let n = row1 + row2;
    let points: Vec<(u64, BigUint)> = (0..=row2.min(col1))
        .filter(|&b| col1 - b <= row1)
        .map(|b| (b, pascal.choose(row2, b) * pascal.choose(row1, col1 - b)))
        .collect();
    let denom = pascal.choose(n, col1);
    points
        .iter()
        .map(|(b, obs)| {
            let acc: BigUint = points.iter().filter(|(_, p)| p <= obs).map(|(_, p)| p).sum();
            let ratio = BigRational::new(acc.into(), denom.clone().into());
            (*b, ratio.to_f64().unwrap())
        })
        .collect()
}

pub fn fisher_enumerated(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let pascal = Pascal::new((a + b + c + d) as usize);
    fisher_support(&pascal, a + c, b + d, a + b)
        .into_iter()
        .find(|&(bb, _)| bb == b)
        .unwrap()
        .1
}

/// Stationary vector of the damped walk by a dense linear solve of
/// `(I - d M) x = (1 - d)/n`, where column `u` of `M` is `u`'s transition
/// distribution (uniform for nodes without edges).
pub fn pagerank_dense(n: usize, edges: &[(usize, usize, f64)], damping: f64) -> Vec<f64> {
    let mut w = DMatrix::<f64>::zeros(n, n);
    for &(x, y, wt) in edges {
        w[(x, y)] += wt;
        w[(y, x)] += wt;
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        let out: f64 = (0..n).map(|v| w[(u, v)]).sum();
        for v in 0..n {
            m[(v, u)] = if out > 0.0 { w[(u, v)] / out } else { 1.0 / n as f64 };
        }
    }
    let a = DMatrix::<f64>::identity(n, n) - m * damping;
    let rhs = DVector::<f64>::from_element(n, (1.0 - damping) / n as f64);
    let x = a.lu().solve(&rhs).expect("I - dM is nonsingular");
    let s = x.sum();
    x.iter().map(|v| v / s).collect()
}
