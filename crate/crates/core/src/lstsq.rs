//! Small dense linear least squares by Householder QR.
//!
//! Columns are scaled to unit norm before factorization, so bases mixing
//! `(R/eps)^2` with `ln(R/eps)` stay well conditioned.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residual_rms: f64,
}

/// Minimizes `|sum_k c_k columns[k] - y|_2`.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares> {
    let m = y.len();
    let k = columns.len();
    if k == 0 || m < k {
        return Err(Error::InsufficientData(format!("least squares needs at least {k} rows, got {m}")));
    }
    if columns.iter().any(|c| c.len() != m) {
        return Err(Error::Numerical("least-squares columns differ in length".into()));
    }

    let mut scales = Vec::with_capacity(k);
    // Column-major working copy.
    let mut a: Vec<f64> = Vec::with_capacity(m * k);
    for c in columns {
        let norm = libm::sqrt(c.iter().map(|v| v * v).sum::<f64>());
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical("degenerate least-squares column".into()));
        }
        scales.push(norm);
        a.extend(c.iter().map(|v| v / norm));
    }
    let mut b = y.to_vec();

    for j in 0..k {
        let col = j * m;
        let norm = libm::sqrt(a[col + j..col + m].iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            return Err(Error::Numerical("rank-deficient least-squares basis".into()));
        }
        let alpha = if a[col + j] > 0.0 { -norm } else { norm };
        // v = x - alpha e1, stored in place.
        a[col + j] -= alpha;
        let vnorm2: f64 = a[col + j..col + m].iter().map(|v| v * v).sum();
        for jj in j + 1..k {
            let other = jj * m;
            let dot: f64 = (j..m).map(|i| a[col + i] * a[other + i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..m {
                a[other + i] -= f * a[col + i];
            }
        }
        let dot: f64 = (j..m).map(|i| a[col + i] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in j..m {
            b[i] -= f * a[col + i];
        }
        // Diagonal of R.
        a[col + j] = alpha;
    }

    let mut coef = alloc::vec![0.0; k];
    for j in (0..k).rev() {
        let mut acc = b[j];
        for jj in j + 1..k {
            acc -= a[jj * m + j] * coef[jj];
        }
        let r = a[j * m + j];
        if libm::fabs(r) < 1e-13 {
            return Err(Error::Numerical("rank-deficient least-squares basis".into()));
        }
        coef[j] = acc / r;
    }
    for (c, s) in coef.iter_mut().zip(&scales) {
        *c /= s;
    }

    let mut ss = 0.0;
    for i in 0..m {
        let fit: f64 = columns.iter().zip(&coef).map(|(c, w)| c[i] * w).sum();
        let r = y[i] - fit;
        ss += r * r;
    }
    Ok(LeastSquares { coefficients: coef, residual_rms: libm::sqrt(ss / m as f64) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let fit = least_squares(&[x.clone(), vec![1.0; 10]], &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-12);
        assert!(fit.residual_rms < 1e-12);
    }

    #[test]
    fn badly_scaled_basis() {
        let t: Vec<f64> = (0..20).map(|i| libm::pow(10.0, 2.0 + 0.1 * i as f64)).collect();
        let sq: Vec<f64> = t.iter().map(|v| v * v).collect();
        let lg: Vec<f64> = t.iter().map(|v| libm::log(*v)).collect();
        let y: Vec<f64> = (0..20).map(|i| 4.0 * sq[i] - 7.0 * lg[i] + 0.5).collect();
        let fit = least_squares(&[sq, lg, vec![1.0; 20]], &y).unwrap();
        assert!((fit.coefficients[0] - 4.0).abs() < 1e-12);
        assert!((fit.coefficients[1] + 7.0).abs() < 1e-5);
    }

    #[test]
    fn rank_deficiency_is_detected() {
        let a = vec![1.0, 2.0, 3.0];
        assert!(least_squares(&[a.clone(), a.clone()], &[1.0, 2.0, 3.0]).is_err());
        assert!(least_squares(&[a], &[1.0, 2.0]).is_err());
    }
}
