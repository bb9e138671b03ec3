//! Exact entanglement entropies of the 1+1D free-fermion CFT.
//!
//! Entropies are in nats. The general-`c` two-interval value multiplies the
//! free-fermion (`c = 1`) expression by `c`; that form is exact only for the
//! single-interval term and the leading singularity, so callers reporting it
//! should label it as the free-fermion functional form
//! ([`two_interval_scaled_from_free_fermion`]).

use alloc::format;

use crate::error::positive;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CentralCharge(f64);

impl CentralCharge {
    pub const FREE_FERMION: CentralCharge = CentralCharge(1.0);

    pub fn new(c: f64) -> Result<Self> {
        positive("c", c).map(CentralCharge)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for CentralCharge {
    fn default() -> Self {
        Self::FREE_FERMION
    }
}

/// Two disjoint intervals `[a1, b1]`, `[a2, b2]` with `a1 < b1 < a2 < b2` and a
/// UV cutoff below every length in the configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPair {
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    epsilon: f64,
}

impl IntervalPair {
    pub fn new(a1: f64, b1: f64, a2: f64, b2: f64, epsilon: f64) -> Result<Self> {
        let epsilon = positive("epsilon", epsilon)?;
        if ![a1, b1, a2, b2].iter().all(|v| v.is_finite()) || !(a1 < b1 && b1 < a2 && a2 < b2) {
            return Err(Error::domain("intervals", format!("need a1 < b1 < a2 < b2, got [{a1}, {b1}], [{a2}, {b2}]")));
        }
        let shortest = (b1 - a1).min(b2 - a2).min(a2 - b1);
        if epsilon >= shortest {
            return Err(Error::domain(
                "epsilon",
                format!("cutoff {epsilon} must be below the shortest length {shortest}"),
            ));
        }
        Ok(IntervalPair { a1, b1, a2, b2, epsilon })
    }

    /// Two intervals of length `l` separated by a gap `x`, starting at 0.
    pub fn equal(l: f64, x: f64, epsilon: f64) -> Result<Self> {
        Self::new(0.0, l, l + x, 2.0 * l + x, epsilon)
    }

    pub fn endpoints(&self) -> [f64; 4] {
        [self.a1, self.b1, self.a2, self.b2]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The same pair with the roles of the two intervals exchanged by the
    /// reflection `y -> -y`.
    pub fn swapped(&self) -> IntervalPair {
        IntervalPair { a1: -self.b2, b1: -self.a2, a2: -self.b1, b2: -self.a1, epsilon: self.epsilon }
    }
}

/// `(c/3) ln(L/eps)`.
pub fn single_interval_entropy(length: f64, epsilon: f64, c: CentralCharge) -> Result<f64> {
    let length = positive("L", length)?;
    let epsilon = positive("epsilon", epsilon)?;
    if length <= epsilon {
        return Err(Error::domain("L", format!("length {length} must exceed the cutoff {epsilon}")));
    }
    Ok(c.0 / 3.0 * libm::log(length / epsilon))
}

/// Free-fermion entropy of the union of two intervals.
pub fn two_interval_entropy(pair: &IntervalPair, c: CentralCharge) -> f64 {
    let IntervalPair { a1, b1, a2, b2, epsilon } = *pair;
    let l = |d: f64| libm::log(libm::fabs(d) / epsilon);
    let cross = l(a1 - b1) + l(a1 - b2) + l(a2 - b1) + l(a2 - b2);
    c.0 / 3.0 * (cross - l(a1 - a2) - l(b1 - b2))
}

/// True when a two-interval value is the free-fermion expression scaled to a
/// central charge other than 1 rather than a result for that theory.
pub fn two_interval_scaled_from_free_fermion(c: CentralCharge) -> bool {
    c.0 != 1.0
}

/// `(c/3) ln((L+x)^2 / (x (2L+x)))`; cutoff independent and nonnegative.
pub fn mutual_information_equal_intervals(length: f64, x: f64, c: CentralCharge) -> Result<f64> {
    let l = positive("L", length)?;
    let x = positive("x", x)?;
    // ln(1 + L^2 / (x (2L + x))) keeps precision when x >> L.
    Ok(c.0 / 3.0 * libm::log1p(l * l / (x * (2.0 * l + x))))
}

/// Coefficient of `ln(1/x)` in the mutual information as `x -> 0`.
pub fn singularity_coefficient(c: CentralCharge) -> f64 {
    c.0 / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::E;

    const C1: CentralCharge = CentralCharge::FREE_FERMION;

    #[test]
    fn single_interval_values() {
        assert!((single_interval_entropy(E * 0.01, 0.01, C1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let v = single_interval_entropy(100.0, 1.0, C1).unwrap();
        assert!((v - 1.535_056_728_662_697).abs() < 1e-12);
        let v3 = single_interval_entropy(100.0, 1.0, CentralCharge::new(3.0).unwrap()).unwrap();
        assert!((v3 - 3.0 * v).abs() < 1e-14);
        assert!(matches!(single_interval_entropy(1.0, 1.0, C1), Err(Error::Domain { param: "L", .. })));
    }

    #[test]
    fn central_charge_must_be_positive() {
        assert!(CentralCharge::new(0.0).is_err());
        assert!(CentralCharge::new(-1.0).is_err());
        assert_eq!(CentralCharge::default().get(), 1.0);
    }

    #[test]
    fn equal_intervals_reduce_to_four_term_form() {
        let (l, x, eps) = (3.0, 0.7, 0.01);
        let pair = IntervalPair::equal(l, x, eps).unwrap();
        let ln = |v: f64| libm::log(v / eps);
        let expected = (2.0 * ln(l) + ln(x) + ln(2.0 * l + x) - 2.0 * ln(l + x)) / 3.0;
        assert!((two_interval_entropy(&pair, C1) - expected).abs() < 1e-13);
    }

    #[test]
    fn six_log_terms_brute_force() {
        let pair = IntervalPair::new(0.0, 1.0, 2.0, 3.0, 0.01).unwrap();
        // |a1-b1|=1, |a1-b2|=3, |a2-b1|=1, |a2-b2|=1, |a1-a2|=2, |b1-b2|=2.
        let t = [1.0f64, 3.0, 1.0, 1.0];
        let mut s = 0.0;
        for d in t {
            s += libm::log(d / 0.01);
        }
        s -= 2.0 * libm::log(2.0 / 0.01);
        assert!((two_interval_entropy(&pair, C1) - s / 3.0).abs() < 1e-13);
    }

    #[test]
    fn factorizes_at_large_separation() {
        let (l, eps) = (1.0, 1e-3);
        let pair = IntervalPair::equal(l, 1e6 * l, eps).unwrap();
        let sum = 2.0 * single_interval_entropy(l, eps, C1).unwrap();
        assert!((two_interval_entropy(&pair, C1) - sum).abs() <= 1e-6);
    }

    #[test]
    fn ordering_and_cutoff_validation() {
        assert!(matches!(IntervalPair::new(0.0, 2.0, 1.0, 3.0, 0.1), Err(Error::Domain { param: "intervals", .. })));
        assert!(matches!(IntervalPair::new(0.0, 1.0, 1.05, 3.0, 0.1), Err(Error::Domain { param: "epsilon", .. })));
        assert!(IntervalPair::new(0.0, 1.0, 2.0, 3.0, 0.0).is_err());
    }

    #[test]
    fn mutual_information_values() {
        let v = mutual_information_equal_intervals(1.0, 1.0, C1).unwrap();
        assert!((v - 0.095_894_024_150_593_64).abs() < 1e-15);
        let v = mutual_information_equal_intervals(2.0, 1.0, C1).unwrap();
        assert!((v - libm::log(9.0 / 5.0) / 3.0).abs() < 1e-15);
        assert!((v - 0.195_928_2).abs() < 1e-6);
        assert!(mutual_information_equal_intervals(1.0, 1e6, C1).unwrap() <= 1e-9);
        assert!(mutual_information_equal_intervals(0.0, 1.0, C1).is_err());
        assert!(matches!(mutual_information_equal_intervals(1.0, -1.0, C1), Err(Error::Domain { param: "x", .. })));
    }

    #[test]
    fn singularity_slope_matches_coefficient() {
        assert_eq!(singularity_coefficient(C1), 1.0 / 3.0);
        assert_eq!(singularity_coefficient(CentralCharge::new(2.0).unwrap()), 2.0 / 3.0);
        let l = 1.0;
        let (x1, x2) = (1e-6 * l, 1e-4 * l);
        let m1 = mutual_information_equal_intervals(l, x1, C1).unwrap();
        let m2 = mutual_information_equal_intervals(l, x2, C1).unwrap();
        let slope = (m2 - m1) / (libm::log(x2) - libm::log(x1));
        assert!((slope + 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn free_fermion_flag() {
        assert!(!two_interval_scaled_from_free_fermion(C1));
        assert!(two_interval_scaled_from_free_fermion(CentralCharge::new(2.0).unwrap()));
    }
}
