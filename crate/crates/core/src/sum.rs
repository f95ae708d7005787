//! Pairwise summation. Rounding error grows as O(log n) instead of O(n), which
//! matters for statistics whose tails decide ROC points.

const BASE: usize = 32;

/// Sums `term(i)` for `i` in `0..n` by recursive halving.
pub fn pairwise_sum<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    sum_range(0, n, &term)
}

/// `pairwise_sum(n, term) / n`; zero for `n == 0`.
pub fn pairwise_mean<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    if n == 0 {
        return 0.0;
    }
    pairwise_sum(n, term) / n as f64
}

fn sum_range<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
    let len = hi - lo;
    if len <= BASE {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += term(i);
        }
        acc
    } else {
        let mid = lo + len / 2;
        sum_range(lo, mid, term) + sum_range(mid, hi, term)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_on_small_input() {
        let v = [1.0, 2.5, -3.0, 4.25];
        assert_eq!(pairwise_sum(v.len(), |i| v[i]), 4.75);
        assert_eq!(pairwise_mean(0, |_| 1.0), 0.0);
    }

    #[test]
    fn beats_naive_accumulation() {
        // 10^6 copies of 0.1: naive left-to-right drifts by ~1e-6.
        let n = 1_000_000;
        let s = pairwise_sum(n, |_| 0.1);
        assert!((s - 100_000.0).abs() < 1e-8, "{s}");
    }
}
