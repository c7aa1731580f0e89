//! Correlation, odds ratio and 2x2 significance tests.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::countrank::hypergeom::{ln_pmf, log_sum_exp, LogFactorials};

/// Margins above this switch [`fisher_exact`] to the chi-square approximation.
pub const CHI_SQUARE_THRESHOLD: u64 = 10_000_000;

// relative slack when comparing point probabilities in log space
const TIE_TOLERANCE: f64 = 1e-7;

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::DegenerateInput(format!(
            "series lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(AnalysisError::DegenerateInput("need at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::DegenerateInput("constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Molecule-pair counts for random versus co-author-derived pairs.
///
/// Columns are non-neighbor / neighbor, rows random / co-author.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub random_nonneighbor: u64,
    pub coauthor_nonneighbor: u64,
    pub random_neighbor: u64,
    pub coauthor_neighbor: u64,
}

impl ContingencyTable {
    /// Cells in `(a, b, c, d)` order.
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        Self {
            random_nonneighbor: a,
            coauthor_nonneighbor: b,
            random_neighbor: c,
            coauthor_neighbor: d,
        }
    }

    pub fn cells(&self) -> [u64; 4] {
        [
            self.random_nonneighbor,
            self.coauthor_nonneighbor,
            self.random_neighbor,
            self.coauthor_neighbor,
        ]
    }

    pub fn total(&self) -> u64 {
        self.cells().iter().sum()
    }

    /// Exchange the neighbor and non-neighbor columns.
    pub fn swap_columns(&self) -> Self {
        Self::new(
            self.random_neighbor,
            self.coauthor_neighbor,
            self.random_nonneighbor,
            self.coauthor_nonneighbor,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OddsRatio {
    pub value: f64,
    /// Set when a zero cell forced the +0.5 (Haldane) correction.
    pub haldane_corrected: bool,
}

/// `(d / b) / (c / a)`, with +0.5 added to every cell if any cell is zero.
pub fn odds_ratio(t: &ContingencyTable) -> Result<OddsRatio, AnalysisError> {
    if t.total() == 0 {
        return Err(AnalysisError::InvalidTable("table is empty".into()));
    }
    let [a, b, c, d] = t.cells().map(|v| v as f64);
    let corrected = t.cells().contains(&0);
    let (a, b, c, d) = if corrected {
        (a + 0.5, b + 0.5, c + 0.5, d + 0.5)
    } else {
        (a, b, c, d)
    };
    Ok(OddsRatio {
        value: (a * d) / (b * c),
        haldane_corrected: corrected,
    })
}

/// Two-sided Fisher exact test: total probability of all tables with the
/// observed margins whose point probability does not exceed the observed one.
///
/// Falls back to a 1-dof Pearson chi-square test when any margin exceeds
/// [`CHI_SQUARE_THRESHOLD`].
pub fn fisher_exact(t: &ContingencyTable) -> Result<f64, AnalysisError> {
    let [a, b, c, d] = t.cells();
    let (row_random, row_coauthor) = (a + c, b + d);
    let (col_non, col_nb) = (a + b, c + d);
    if [row_random, row_coauthor, col_non, col_nb].contains(&0) {
        return Err(AnalysisError::InvalidTable(
            "every row and column margin must be positive".into(),
        ));
    }
    if [row_random, row_coauthor, col_non, col_nb]
        .iter()
        .any(|&m| m > CHI_SQUARE_THRESHOLD)
    {
        return Ok(chi_square_p(t));
    }
    let n = t.total();
    // X = a ~ Hypergeometric(population n, successes col_non, sample row_random)
    let lo = (row_random + col_non).saturating_sub(n);
    let hi = row_random.min(col_non);
    if let Some(p) = fisher_exact_small(n, col_non, row_random, a, lo, hi) {
        return Ok(p);
    }
    let lf = LogFactorials::new(n as usize);
    let (n, k_pop, sample) = (n as usize, col_non as usize, row_random as usize);
    let ln_obs = ln_pmf(&lf, n, k_pop, sample, a as usize);
    let cutoff = ln_obs + TIE_TOLERANCE.ln_1p();
    let terms: Vec<f64> = (lo as usize..=hi as usize)
        .map(|i| ln_pmf(&lf, n, k_pop, sample, i))
        .filter(|&lp| lp <= cutoff)
        .collect();
    Ok(log_sum_exp(&terms).exp().clamp(0.0, 1.0))
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 0..k {
        c = c.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(c)
}

// Exact integer path used while every binomial fits in u128; ties are then
// decided without rounding.
fn fisher_exact_small(n: u64, k_pop: u64, sample: u64, obs: u64, lo: u64, hi: u64) -> Option<f64> {
    let weight = |i: u64| -> Option<u128> { binomial(k_pop, i)?.checked_mul(binomial(n - k_pop, sample - i)?) };
    let total = binomial(n, sample)?;
    let w_obs = weight(obs)?;
    let mut acc: u128 = 0;
    for i in lo..=hi {
        let w = weight(i)?;
        if w <= w_obs {
            acc = acc.checked_add(w)?;
        }
    }
    Some((acc as f64 / total as f64).min(1.0))
}

/// Pearson chi-square test (1 dof, no continuity correction).
pub fn chi_square_p(t: &ContingencyTable) -> f64 {
    let [a, b, c, d] = t.cells().map(|v| v as f64);
    let n = a + b + c + d;
    let num = n * (a * d - b * c).powi(2);
    let den = (a + b) * (c + d) * (a + c) * (b + d);
    if den == 0.0 {
        return 1.0;
    }
    let chi2 = num / den;
    statrs::function::erf::erfc((chi2 / 2.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        let xs: Vec<f64> = (1..=6).map(f64::from).collect();
        let rev: Vec<f64> = xs.iter().rev().copied().collect();
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &rev).unwrap() + 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn odds_ratio_cases() {
        let or = odds_ratio(&ContingencyTable::new(1, 1, 1, 1)).unwrap();
        assert_eq!(or.value, 1.0);
        assert!(!or.haldane_corrected);
        assert_eq!(odds_ratio(&ContingencyTable::new(10, 10, 10, 20)).unwrap().value, 2.0);
        let z = odds_ratio(&ContingencyTable::new(0, 3, 4, 5)).unwrap();
        assert!(z.haldane_corrected);
        assert!((z.value - (0.5 * 5.5) / (3.5 * 4.5)).abs() < 1e-15);
    }

    #[test]
    fn fisher_small_cases() {
        assert_eq!(fisher_exact(&ContingencyTable::new(1, 1, 1, 1)).unwrap(), 1.0);
        let p = fisher_exact(&ContingencyTable::new(5, 0, 0, 5)).unwrap();
        assert!((p - 2.0 / 252.0).abs() < 1e-15);
        assert!(fisher_exact(&ContingencyTable::new(0, 0, 3, 4)).is_err());
    }

    #[test]
    fn log_path_agrees_with_exact_path() {
        // force both paths on the same table
        let t = ContingencyTable::new(40, 12, 9, 30);
        let exact = fisher_exact(&t).unwrap();
        let (n, k_pop, sample, obs) = (91usize, 52usize, 49usize, 40usize);
        let lf = LogFactorials::new(n);
        let ln_obs = ln_pmf(&lf, n, k_pop, sample, obs);
        let terms: Vec<f64> = (10..=49)
            .map(|i| ln_pmf(&lf, n, k_pop, sample, i))
            .filter(|&lp| lp <= ln_obs + 1e-7)
            .collect();
        let approx = log_sum_exp(&terms).exp();
        assert!((exact - approx).abs() < 1e-12, "{exact} vs {approx}");
    }

    #[test]
    fn chi_square_on_strong_association() {
        let t = ContingencyTable::new(239_670, 381, 10_330, 287);
        assert!(chi_square_p(&t) < 1e-15);
        assert!((chi_square_p(&ContingencyTable::new(10, 10, 10, 10)) - 1.0).abs() < 1e-12);
    }
}
