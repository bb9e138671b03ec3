//! Order-fixed summation.
//!
//! Panel double sums are reduced row by row and the row totals are combined by
//! [`pairwise_sum`], whose association order depends only on the slice length.
//! A parallel driver that computes the same rows therefore reproduces the
//! serial result bit for bit.

const LEAF: usize = 8;

/// Sums `values` by recursive halving down to blocks of eight.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn small_and_empty() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn beats_naive_on_harmonic_tail() {
        let v: Vec<f64> = (0..1_000_000).map(|_| 0.1).collect();
        let s = pairwise_sum(&v);
        assert!((s - 100_000.0).abs() < 1e-6);
    }
}
