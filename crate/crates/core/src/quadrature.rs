//! Globally adaptive Gauss-Kronrod (7/15) quadrature.
//!
//! Error estimates use the QUADPACK rescaling of `|K15 - G7|`. The interval
//! with the largest estimated error is bisected until the total estimate meets
//! the tolerance. Integrable endpoint singularities should be removed by a
//! change of variables at the call site; interior kinks should be passed as
//! breakpoints. Tolerances tighter than the roundoff floor stop at the floor.

use alloc::format;
use alloc::vec::Vec;

use crate::sum::pairwise_sum;
use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn relative(relative: f64) -> Self {
        Tolerance { relative, absolute: 0.0, max_intervals: 4000 }
    }

    pub const fn with_absolute(mut self, absolute: f64) -> Self {
        self.absolute = absolute;
        self
    }

    pub const fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    // Roundoff floor of `error`; a segment sitting at its floor cannot improve.
    floor: f64,
}

fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = libm::fabs(kronrod);
    let mut fv = [(0.0, 0.0); 7];
    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        *slot = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (libm::fabs(f1) + libm::fabs(f2));
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    if !kronrod.is_finite() {
        return Err(Error::Numerical(format!("integrand is not finite on [{a:e}, {b:e}]")));
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * libm::fabs(fc - mean);
    for (j, (f1, f2)) in fv.iter().enumerate() {
        res_asc += WGK[j] * (libm::fabs(f1 - mean) + libm::fabs(f2 - mean));
    }
    let abs_half = libm::fabs(half);
    let res_abs = res_abs * abs_half;
    let res_asc = res_asc * abs_half;

    let mut error = libm::fabs((kronrod - gauss) * half);
    if res_asc != 0.0 && error != 0.0 {
        let scale = libm::pow(200.0 * error / res_asc, 1.5);
        error = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    let mut floor = 0.0;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        floor = 50.0 * f64::EPSILON * res_abs;
        error = error.max(floor);
    }
    Ok(Segment { a, b, value: kronrod * half, error, floor })
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_with_breakpoints(f, &[a, b], tol)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the
/// subdivision given by `points` (which must be non-decreasing).
pub fn integrate_with_breakpoints<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Estimate> {
    if points.len() < 2 {
        return Err(Error::Numerical(format!("quadrature needs at least two points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Numerical(format!("quadrature breakpoints must be finite and non-decreasing: {points:?}")));
    }
    let mut segments: Vec<Segment> = Vec::with_capacity(points.len() + 64);
    for w in points.windows(2) {
        if w[1] > w[0] {
            segments.push(rule(&f, w[0], w[1])?);
        }
    }
    if segments.is_empty() {
        return Ok(Estimate { value: 0.0, error: 0.0, intervals: 0 });
    }

    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let floor: f64 = segments.iter().map(|s| s.floor).sum();
        let target = tol.absolute.max(tol.relative * libm::fabs(value)).max(floor * (1.0 + 1e-9));
        if error <= target {
            break;
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature did not converge: estimate {value:e} with error {error:e} after {} intervals",
                segments.len()
            )));
        }
        let (worst, _) = segments.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, s)| {
            if s.error > best.1 {
                (i, s.error)
            } else {
                best
            }
        });
        let s = segments[worst];
        let mid = 0.5 * (s.a + s.b);
        if !(mid > s.a && mid < s.b) {
            return Err(Error::Numerical(format!(
                "quadrature interval [{:e}, {:e}] cannot be bisected further",
                s.a, s.b
            )));
        }
        segments[worst] = rule(&f, s.a, mid)?;
        segments.push(rule(&f, mid, s.b)?);
    }

    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let values: Vec<f64> = segments.iter().map(|s| s.value).collect();
    Ok(Estimate {
        value: pairwise_sum(&values),
        error: segments.iter().map(|s| s.error).sum(),
        intervals: segments.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree 22 exactly.
        let est = integrate(|x| libm::pow(x, 10.0), 0.0, 2.0, Tolerance::relative(1e-14)).unwrap();
        assert!((est.value - 2048.0 / 11.0).abs() < 1e-10);
        assert_eq!(est.intervals, 1);
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let g: f64 = 2.0 * (WG[0] + WG[1] + WG[2]) + WG[3];
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((g - 2.0).abs() < 1e-15);
        assert!((k - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_endpoint_converges() {
        let est = integrate(libm::sqrt, 0.0, 1.0, Tolerance::relative(1e-12)).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kink_with_breakpoint() {
        let f = |x: f64| libm::fabs(x - 0.3);
        let est = integrate_with_breakpoints(f, &[0.0, 0.3, 1.0], Tolerance::relative(1e-14)).unwrap();
        assert!((est.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn non_finite_integrand_is_numerical_failure() {
        let err = integrate(|x| 1.0 / x, 0.0, 1.0, Tolerance::relative(1e-10)).unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let tol = Tolerance::relative(1e-15).with_max_intervals(3);
        let err = integrate(|x| libm::sin(50.0 * x), 0.0, 10.0, tol).unwrap_err();
        assert!(err.is_numerical());
    }
}
