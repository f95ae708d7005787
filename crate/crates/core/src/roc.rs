//! Empirical operating points from Monte Carlo statistic populations.

use alloc::vec::Vec;

use crate::schemes::Rule;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub p_fa: f64,
    pub p_m: f64,
}

#[inline]
fn score(statistic: f64, rule: Rule) -> f64 {
    match rule {
        Rule::SingleSided => statistic,
        Rule::DoubleSided => libm::fabs(statistic),
    }
}

/// Number of H0 samples allowed to exceed the threshold.
fn exceed_budget(p_fa: f64, n: usize) -> Result<usize> {
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::param("p_fa", "must lie in (0, 1)"));
    }
    let k = libm::floor(p_fa * n as f64 + 1e-9) as usize;
    if k < 1 {
        return Err(Error::Resolution { p_fa, trials: n });
    }
    Ok(k)
}

/// `(1 − p_fa)` order statistic of the H0 scores (`|L|` for double-sided
/// rules): the value exceeded by exactly `floor(p_fa · n)` samples when there
/// are no ties.
pub fn empirical_threshold(h0: &[f64], p_fa: f64, rule: Rule) -> Result<f64> {
    if h0.is_empty() {
        return Err(Error::param("h0", "empty population"));
    }
    let mut scores: Vec<f64> = h0.iter().map(|&l| score(l, rule)).collect();
    scores.sort_by(f64::total_cmp);
    threshold_from_sorted(&scores, p_fa)
}

fn threshold_from_sorted(sorted: &[f64], p_fa: f64) -> Result<f64> {
    let k = exceed_budget(p_fa, sorted.len())?;
    Ok(sorted[sorted.len() - 1 - k])
}

/// Fraction of statistics that the rule declares H1 at threshold `psi`.
pub fn detection_rate(stats: &[f64], psi: f64, rule: Rule) -> f64 {
    if stats.is_empty() {
        return 0.0;
    }
    stats.iter().filter(|&&l| score(l, rule) > psi).count() as f64 / stats.len() as f64
}

/// Fraction of H1 statistics declared H0.
pub fn miss_rate(h1: &[f64], psi: f64, rule: Rule) -> f64 {
    1.0 - detection_rate(h1, psi, rule)
}

/// One point per grid entry: threshold from `h0`, miss rate from `h1`.
///
/// The grid must be strictly increasing.
pub fn roc_points(h0: &[f64], h1: &[f64], grid: &[f64], rule: Rule) -> Result<Vec<RocPoint>> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("pfa_grid", "must be strictly increasing"));
    }
    if h0.is_empty() || h1.is_empty() {
        return Err(Error::param("population", "empty statistic population"));
    }
    let mut sorted: Vec<f64> = h0.iter().map(|&l| score(l, rule)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut h1_scores: Vec<f64> = h1.iter().map(|&l| score(l, rule)).collect();
    h1_scores.sort_by(f64::total_cmp);
    grid.iter()
        .map(|&p_fa| {
            let psi = threshold_from_sorted(&sorted, p_fa)?;
            // misses are scores ≤ ψ
            let misses = h1_scores.partition_point(|&s| s <= psi);
            Ok(RocPoint { p_fa, p_m: misses as f64 / h1_scores.len() as f64 })
        })
        .collect()
}

/// Standard error of a binomial proportion estimated from `n` trials.
pub fn binomial_standard_error(p: f64, n: usize) -> f64 {
    libm::sqrt(p * (1.0 - p) / n as f64)
}

/// 1-2-5 log-spaced false-alarm targets from 1e−3 to 0.5, dropping any below
/// `10 / trials`.
pub fn default_pfa_grid(trials: usize) -> Vec<f64> {
    const GRID: [f64; 9] = [1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5];
    let floor = 10.0 / trials.max(1) as f64;
    GRID.iter().copied().filter(|&p| p >= floor).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn threshold_examples() {
        assert_eq!(empirical_threshold(&[1.0, 2.0, 3.0, 4.0], 0.25, Rule::DoubleSided).unwrap(), 3.0);
        assert_eq!(empirical_threshold(&[-4.0, 2.0, -3.0, 1.0], 0.25, Rule::DoubleSided).unwrap(), 3.0);
        assert_eq!(empirical_threshold(&[-4.0, 2.0, -3.0, 1.0], 0.25, Rule::SingleSided).unwrap(), 1.0);
        // median of |L| on a symmetric population
        let sym = [-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(empirical_threshold(&sym, 0.5, Rule::DoubleSided).unwrap(), 2.0);
        assert_eq!(detection_rate(&sym, 2.0, Rule::DoubleSided), 0.5);
    }

    #[test]
    fn resolution_guard() {
        let pop = vec![0.0; 1000];
        assert_eq!(
            empirical_threshold(&pop, 1e-4, Rule::SingleSided),
            Err(Error::Resolution { p_fa: 1e-4, trials: 1000 })
        );
        assert!(empirical_threshold(&pop, 1e-3, Rule::SingleSided).is_ok());
        assert!(empirical_threshold(&[], 0.5, Rule::SingleSided).is_err());
        assert!(empirical_threshold(&pop, 1.0, Rule::SingleSided).is_err());
    }

    #[test]
    fn realized_false_alarm_within_one_order_statistic() {
        let h0: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 10_007) as f64 - 5000.0).collect();
        for p in [1e-3, 1e-2, 0.05, 0.3] {
            for rule in [Rule::SingleSided, Rule::DoubleSided] {
                let psi = empirical_threshold(&h0, p, rule).unwrap();
                let realized = detection_rate(&h0, psi, rule);
                assert!((realized - p).abs() <= 1.0 / h0.len() as f64 + 1e-12, "{p} {realized}");
            }
        }
    }

    #[test]
    fn identical_populations_give_one_minus_pfa() {
        let pop: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let pts = roc_points(&pop, &pop, &[0.01, 0.1, 0.5], Rule::SingleSided).unwrap();
        for p in pts {
            assert!((p.p_m - (1.0 - p.p_fa)).abs() < 1e-12);
        }
        assert!(roc_points(&pop, &pop, &[0.1, 0.1], Rule::SingleSided).is_err());
    }

    #[test]
    fn grid_respects_trial_floor() {
        assert_eq!(default_pfa_grid(10_000).len(), 9);
        assert_eq!(default_pfa_grid(1000), vec![1e-2, 2e-2, 5e-2, 0.1, 0.2, 0.5]);
    }
}
