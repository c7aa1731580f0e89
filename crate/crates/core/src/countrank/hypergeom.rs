//! Hypergeometric tail probabilities in log space.

use serde::{Deserialize, Serialize};

use super::RankError;

/// Table of `ln(i!)` for `i in 0..=n`, built with compensated summation so
/// the absolute error stays near one ulp of the largest entry.
#[derive(Clone, Debug)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in 1..=n {
            let y = (i as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            table.push(sum);
        }
        Self { table }
    }

    pub fn max(&self) -> usize {
        self.table.len() - 1
    }

    /// Grow the table so that it covers `n`.
    pub fn ensure(&mut self, n: usize) {
        if n > self.max() {
            *self = Self::new(n);
        }
    }

    #[inline]
    pub fn ln_fact(&self, n: usize) -> f64 {
        self.table[n]
    }

    #[inline]
    pub fn ln_choose(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Parameters of a one-sided enrichment test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergeomQuery {
    /// Population size `N`.
    pub population: u64,
    /// Successes in the population `K`.
    pub successes: u64,
    /// Sample size `n`.
    pub sample: u64,
    /// Observed successes in the sample `k`.
    pub observed: u64,
}

impl HypergeomQuery {
    pub fn validate(&self) -> Result<(), RankError> {
        let HypergeomQuery {
            population: n_pop,
            successes: k_pop,
            sample: n,
            observed: k,
        } = *self;
        if k_pop > n_pop || n > n_pop || k > n || k > k_pop {
            return Err(RankError::InvalidParams(format!(
                "need 0 <= K <= N, 0 <= k <= n <= N, k <= K; got N={n_pop} K={k_pop} n={n} k={k}"
            )));
        }
        Ok(())
    }

    /// Smallest and largest attainable number of sample successes.
    pub fn support(&self) -> (u64, u64) {
        let lo = (self.sample + self.successes).saturating_sub(self.population);
        (lo, self.sample.min(self.successes))
    }
}

/// `ln P(X = i)` for `X ~ Hypergeometric(N, K, n)`.
pub fn ln_pmf(lf: &LogFactorials, n_pop: usize, k_pop: usize, n: usize, i: usize) -> f64 {
    lf.ln_choose(k_pop, i) + lf.ln_choose(n_pop - k_pop, n - i) - lf.ln_choose(n_pop, n)
}

/// Sum `exp(terms)` by factoring out the largest term.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `P(X >= k)` using a caller-provided table (must cover `N`).
pub fn hypergeom_sf_with(lf: &LogFactorials, q: &HypergeomQuery) -> Result<f64, RankError> {
    q.validate()?;
    let (lo, hi) = q.support();
    if q.observed <= lo {
        return Ok(1.0);
    }
    if q.observed > hi {
        return Ok(0.0);
    }
    if (q.population as usize) > lf.max() {
        return Err(RankError::InvalidParams(format!(
            "log-factorial table covers {} but N = {}",
            lf.max(),
            q.population
        )));
    }
    let (n_pop, k_pop, n) = (q.population as usize, q.successes as usize, q.sample as usize);
    let terms: Vec<f64> = (q.observed as usize..=hi as usize)
        .map(|i| ln_pmf(lf, n_pop, k_pop, n, i))
        .collect();
    Ok(log_sum_exp(&terms).exp().clamp(0.0, 1.0))
}

/// `P(X >= k)` for a hypergeometric `X` with parameters `(N, K, n)`.
pub fn hypergeom_sf(q: &HypergeomQuery) -> Result<f64, RankError> {
    q.validate()?;
    let lf = LogFactorials::new(q.population as usize);
    hypergeom_sf_with(&lf, q)
}
