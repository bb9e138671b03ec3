//! Eigenvalues of dense real symmetric matrices.
//!
//! Householder reduction to tridiagonal form followed by implicit QL with
//! Wilkinson-style shifts. Only eigenvalues are produced; the correlation
//! matrix method never needs the vectors.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

const MAX_QL_SWEEPS: usize = 60;

/// Returns the eigenvalues of the `n x n` symmetric matrix stored row-major in
/// `matrix`, sorted ascending. Only the lower triangle is read.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    if matrix.len() != n * n {
        return Err(Error::Numerical(format!("matrix has {} entries, expected {n}x{n}", matrix.len())));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let mut a = matrix.to_vec();
    // Symmetrize from the lower triangle so the reduction sees an exactly
    // symmetric input.
    for i in 0..n {
        for j in 0..i {
            a[j * n + i] = a[i * n + j];
        }
    }
    let (mut diag, mut off) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut diag, &mut off)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

/// Reduces `a` in place; returns the diagonal and the sub-diagonal
/// (`off[i]` couples `i` and `i + 1`, `off[n - 1] = 0`).
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut diag = alloc::vec![0.0; n];
    let mut off = alloc::vec![0.0; n];
    let mut v = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        // Reflector annihilating a[k+2.., k].
        let m = n - k - 1;
        let col = |i: usize| a[(k + 1 + i) * n + k];
        let alpha = col(0);
        let mut tail = 0.0;
        for i in 1..m {
            tail += col(i) * col(i);
        }
        diag[k] = a[k * n + k];
        if tail == 0.0 {
            off[k] = alpha;
            continue;
        }
        let norm = libm::sqrt(alpha * alpha + tail);
        let beta = if alpha >= 0.0 { -norm } else { norm };
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);
        v[0] = 1.0;
        for (i, slot) in v[..m].iter_mut().enumerate().skip(1) {
            *slot = col(i) * scale;
        }
        off[k] = beta;

        // p = tau * A22 v,  w = p - (tau/2)(p.v) v,  A22 -= v w' + w v'
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let mut acc = 0.0;
            for (aij, vj) in row.iter().zip(&v[..m]) {
                acc += aij * vj;
            }
            w[i] = tau * acc;
        }
        let mut pv = 0.0;
        for i in 0..m {
            pv += w[i] * v[i];
        }
        let half = 0.5 * tau * pv;
        for i in 0..m {
            w[i] -= half * v[i];
        }
        for i in 0..m {
            let vi = v[i];
            let wi = w[i];
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for (j, aij) in row.iter_mut().enumerate() {
                *aij -= vi * w[j] + wi * v[j];
            }
        }
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        off[n - 2] = a[(n - 1) * n + n - 2];
    }
    if n >= 1 {
        diag[n - 1] = a[(n - 1) * n + n - 1];
        off[n - 1] = 0.0;
    }
    (diag, off)
}

fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    // The reduction is only accurate to eps * |T|, so couplings below that
    // are noise. Without this floor, clusters of eigenvalues near zero never
    // meet the relative test.
    let norm = d.iter().zip(e.iter()).fold(0.0f64, |m, (a, b)| m.max(libm::fabs(*a) + 2.0 * libm::fabs(*b)));
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = libm::fabs(d[m]) + libm::fabs(d[m + 1]);
                if libm::fabs(e[m]) <= f64::EPSILON * dd || libm::fabs(e[m]) <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::Numerical(format!("QL iteration did not converge for eigenvalue {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn two_by_two() {
        let ev = symmetric_eigenvalues(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-15);
        assert!((ev[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_and_trivial_sizes() {
        assert!(symmetric_eigenvalues(&[], 0).unwrap().is_empty());
        assert_eq!(symmetric_eigenvalues(&[4.0], 1).unwrap(), vec![4.0]);
        let ev = symmetric_eigenvalues(&[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0], 3).unwrap();
        assert_eq!(ev, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        // Path graph Laplacian-like matrix: 2 on the diagonal, -1 off it.
        let n = 40;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let ev = symmetric_eigenvalues(&a, n).unwrap();
        for (k, lam) in ev.iter().enumerate() {
            let theta = core::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64;
            let exact = 2.0 - 2.0 * libm::cos(theta);
            assert!((lam - exact).abs() < 1e-13, "k={k}: {lam} vs {exact}");
        }
    }

    #[test]
    fn rejects_bad_shape_and_nan() {
        assert!(symmetric_eigenvalues(&[1.0, 2.0], 2).is_err());
        assert!(symmetric_eigenvalues(&[f64::NAN], 1).unwrap_err().is_numerical());
    }
}
