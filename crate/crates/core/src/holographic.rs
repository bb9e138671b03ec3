//! Minimal-surface entropies of strips in AdS4 (two boundary dimensions).
//!
//! A strip of width `w` and length `L` bounds a bulk surface that dips to the
//! turning point `r* = w / (2K)` with `K = \int_0^1 u^2 / sqrt(1 - u^4) du`.
//! Its regulated area per unit length is `k1 / epsilon - k2 / w`. Every
//! result is in units of the prefactor `L_AdS^2 / 4G_N`, which defaults to 1.
//!
//! `k1` and `k2` come from quadrature of the area integral and are computed
//! once per process.

use alloc::boxed::Box;
use alloc::format;
use core::f64::consts::PI;

use once_cell::race::OnceBox;

use crate::error::positive;
use crate::quadrature::{integrate, integrate_with_breakpoints, Tolerance};
use crate::{Error, Result};

/// Adiabatic profiles steeper than this are flagged.
pub const MAX_ADIABATIC_SLOPE: f64 = 0.3;

const AREA_TOL: Tolerance = Tolerance::relative(1e-14).with_max_intervals(2000);
// Two cutoffs at unit width; the area's next correction is O(epsilon^3).
const K_CUTOFFS: [f64; 2] = [1e-3, 2e-3];

/// `K = \int_0^1 u^2 / sqrt(1 - u^4) du` by quadrature in `v = sqrt(1 - u)`.
pub fn turning_integral() -> Result<f64> {
    let f = |v: f64| {
        let u = 1.0 - v * v;
        2.0 * u * u / libm::sqrt((1.0 + u) * (1.0 + u * u))
    };
    Ok(integrate(f, 0.0, 1.0, AREA_TOL)?.value)
}

/// `K = sqrt(pi) Gamma(3/4) / Gamma(1/4)`.
pub fn turning_integral_closed_form() -> f64 {
    libm::sqrt(PI) * libm::tgamma(0.75) / libm::tgamma(0.25)
}

/// `4 pi (Gamma(3/4) / Gamma(1/4))^2 = 4 K^2`.
pub fn k2_closed_form() -> f64 {
    let k = turning_integral_closed_form();
    4.0 * k * k
}

/// Turning point of the connected surface for a strip of width `w`.
pub fn strip_turning_point(w: f64) -> Result<f64> {
    let w = positive("w", w)?;
    Ok(w / (2.0 * turning_integral()?))
}

/// Regulated area per unit strip length, by direct quadrature of
/// `2 r*^2 \int_epsilon^{r*} dr / (r^2 sqrt(r*^4 - r^4))`.
pub fn strip_area_per_length(w: f64, epsilon: f64) -> Result<f64> {
    let w = positive("w", w)?;
    let epsilon = positive("epsilon", epsilon)?;
    let r_star = strip_turning_point(w)?;
    if epsilon >= r_star {
        return Err(Error::domain("epsilon", format!("cutoff {epsilon} must lie below the turning point {r_star}")));
    }
    let delta = epsilon / r_star;
    // \int_delta^1 du / (u^2 sqrt(1 - u^4)), split at u = 1/2.
    let split = 0.5f64.max(delta);
    let inner = if delta < split {
        // u = e^{-t} turns du/u^2 into e^t dt.
        let f = |t: f64| libm::exp(t) / libm::sqrt(-libm::expm1(-4.0 * t));
        integrate(f, -libm::log(split), -libm::log(delta), AREA_TOL)?.value
    } else {
        0.0
    };
    // v = sqrt(1 - u) removes the endpoint singularity at u = 1.
    let g = |v: f64| {
        let u = 1.0 - v * v;
        2.0 / (u * u * libm::sqrt((1.0 + u) * (1.0 + u * u)))
    };
    let outer = integrate(g, 0.0, libm::sqrt(1.0 - split), AREA_TOL)?.value;
    Ok(2.0 / r_star * (inner + outer))
}

/// The area coefficients `k1` (divergent) and `k2` (finite, universal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaCoefficients {
    pub k1: f64,
    pub k2: f64,
}

fn compute_coefficients() -> Result<AreaCoefficients> {
    let [e1, e2] = K_CUTOFFS;
    let a1 = strip_area_per_length(1.0, e1)?;
    let a2 = strip_area_per_length(1.0, e2)?;
    // epsilon * a = k1 - k2 epsilon + O(epsilon^4): eliminate the linear term.
    let (g1, g2) = (e1 * a1, e2 * a2);
    let k1 = (e2 * g1 - e1 * g2) / (e2 - e1);
    let k2 = k1 / e1 - a1;
    if !(k1.is_finite() && k2.is_finite()) {
        return Err(Error::Numerical(format!("area coefficients are not finite: k1={k1}, k2={k2}")));
    }
    Ok(AreaCoefficients { k1, k2 })
}

static COEFFICIENTS: OnceBox<AreaCoefficients> = OnceBox::new();

/// Cached quadrature values of `k1` and `k2`.
pub fn area_coefficients() -> Result<AreaCoefficients> {
    if let Some(c) = COEFFICIENTS.get() {
        return Ok(*c);
    }
    let c = compute_coefficients()?;
    Ok(*COEFFICIENTS.get_or_init(|| Box::new(c)))
}

/// Two parallel strips of width `w` and length `L` separated by `x`, with
/// bulk cutoff `epsilon < w / 10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripConfig {
    w: f64,
    length: f64,
    x: f64,
    epsilon: f64,
    prefactor: f64,
}

impl StripConfig {
    pub fn new(w: f64, length: f64, x: f64, epsilon: f64) -> Result<Self> {
        let w = positive("w", w)?;
        let length = positive("L", length)?;
        let x = positive("x", x)?;
        let epsilon = check_cutoff(w, epsilon)?;
        Ok(StripConfig { w, length, x, epsilon, prefactor: 1.0 })
    }

    pub fn with_prefactor(mut self, prefactor: f64) -> Result<Self> {
        self.prefactor = positive("prefactor", prefactor)?;
        Ok(self)
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }
}

fn check_cutoff(w: f64, epsilon: f64) -> Result<f64> {
    let epsilon = positive("epsilon", epsilon)?;
    if epsilon >= w / 10.0 {
        return Err(Error::domain("epsilon", format!("cutoff {epsilon} must be below w/10 = {}", w / 10.0)));
    }
    Ok(epsilon)
}

/// `prefactor (k1 L / epsilon - k2 L / w)`.
pub fn strip_entropy(w: f64, length: f64, epsilon: f64, prefactor: f64) -> Result<f64> {
    let w = positive("w", w)?;
    let length = positive("L", length)?;
    let epsilon = check_cutoff(w, epsilon)?;
    let prefactor = positive("prefactor", prefactor)?;
    let k = area_coefficients()?;
    Ok(prefactor * (k.k1 * length / epsilon - k.k2 * length / w))
}

/// Connected-surface candidate `1/x + 1/(2w + x) - 2/w`.
fn connected_weight(x: f64, w: f64) -> f64 {
    1.0 / x + 1.0 / (2.0 * w + x) - 2.0 / w
}

/// Mutual information of the two strips. The disconnected surface wins
/// exactly when the connected candidate is negative, so the result is
/// `max(0, prefactor k2 L (1/x + 1/(2w + x) - 2/w))`; the cutoff cancels.
pub fn two_strip_mutual_information(cfg: &StripConfig) -> Result<f64> {
    let k = area_coefficients()?;
    let candidate = cfg.prefactor * k.k2 * cfg.length * connected_weight(cfg.x, cfg.w);
    Ok(candidate.max(0.0))
}

/// `x* / w` where the mutual information first vanishes: the root of
/// `t^2 + t - 1 = 0`.
pub fn critical_separation_ratio() -> f64 {
    2.0 / (1.0 + libm::sqrt(5.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// `x(y) = x0 + y^2 / radius`.
    Parabolic { x0: f64, radius: f64 },
    /// `x(y) = x0 + slope |y|`.
    Corner { x0: f64, slope: f64 },
}

impl ProfileKind {
    pub fn x0(&self) -> f64 {
        match *self {
            ProfileKind::Parabolic { x0, .. } | ProfileKind::Corner { x0, .. } => x0,
        }
    }

    pub fn separation(&self, y: f64) -> f64 {
        match *self {
            ProfileKind::Parabolic { x0, radius } => x0 + y * y / radius,
            ProfileKind::Corner { x0, slope } => x0 + slope * libm::fabs(y),
        }
    }

    fn slope_at(&self, y: f64) -> f64 {
        match *self {
            ProfileKind::Parabolic { radius, .. } => 2.0 * libm::fabs(y) / radius,
            ProfileKind::Corner { slope, .. } => slope,
        }
    }

    /// Largest `|y|` with `x(y) <= x_max`.
    fn reach(&self, x_max: f64) -> f64 {
        let gap = x_max - self.x0();
        match *self {
            ProfileKind::Parabolic { radius, .. } => libm::sqrt(gap * radius),
            ProfileKind::Corner { slope, .. } => gap / slope,
        }
    }

    /// Width of the region around `y = 0` where the separation is close to `x0`.
    fn core_width(&self) -> f64 {
        match *self {
            ProfileKind::Parabolic { x0, radius } => libm::sqrt(x0 * radius),
            ProfileKind::Corner { x0, slope } => x0 / slope,
        }
    }
}

/// Two slowly curving strips of width `w0` (possibly infinite) whose local
/// separation is `kind.separation(y)` for `y` in `y_range`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticProfile {
    kind: ProfileKind,
    w0: f64,
    y_range: (f64, f64),
}

impl AdiabaticProfile {
    pub fn new(kind: ProfileKind, w0: f64, y_range: (f64, f64)) -> Result<Self> {
        match kind {
            ProfileKind::Parabolic { x0, radius } => {
                positive("x0", x0)?;
                positive("R", radius)?;
            }
            ProfileKind::Corner { x0, slope } => {
                positive("x0", x0)?;
                positive("m", slope)?;
            }
        }
        if !(w0 > 0.0) {
            return Err(Error::domain("w0", format!("must be positive (infinity allowed), got {w0}")));
        }
        let (lo, hi) = y_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::domain("y_range", format!("need a finite range with lo < hi, got ({lo}, {hi})")));
        }
        Ok(AdiabaticProfile { kind, w0, y_range })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticEstimate {
    pub mutual_information: f64,
    /// Largest `|dx/dy|` over the range that contributes.
    pub max_slope: f64,
    /// Set when `max_slope` exceeds [`MAX_ADIABATIC_SLOPE`].
    pub slope_warning: bool,
}

/// Integrates the local two-strip density
/// `prefactor k2 (1/x(y) + 1/(2 w0 + x(y)) - 2/w0)` over the part of
/// `y_range` where it is positive.
pub fn adiabatic_mutual_information(profile: &AdiabaticProfile, prefactor: f64) -> Result<AdiabaticEstimate> {
    let prefactor = positive("prefactor", prefactor)?;
    let k = area_coefficients()?;
    let kind = profile.kind;
    let w0 = profile.w0;
    let (mut lo, mut hi) = profile.y_range;
    if w0.is_finite() {
        let x_max = critical_separation_ratio() * w0;
        if kind.x0() >= x_max {
            return Ok(AdiabaticEstimate { mutual_information: 0.0, max_slope: 0.0, slope_warning: false });
        }
        let reach = kind.reach(x_max);
        lo = lo.max(-reach);
        hi = hi.min(reach);
        if lo >= hi {
            return Ok(AdiabaticEstimate { mutual_information: 0.0, max_slope: 0.0, slope_warning: false });
        }
    }
    let density = |y: f64| {
        let x = kind.separation(y);
        let v = if w0.is_finite() { connected_weight(x, w0) } else { 1.0 / x };
        v.max(0.0)
    };

    // Breakpoints at the peak and at geometric multiples of its width.
    let mut points = alloc::vec![lo, hi];
    let core = kind.core_width();
    let mut scale = core;
    while scale < (hi - lo) {
        for p in [-scale, scale] {
            if p > lo && p < hi {
                points.push(p);
            }
        }
        scale *= 10.0;
    }
    if lo < 0.0 && hi > 0.0 {
        points.push(0.0);
    }
    points.sort_by(f64::total_cmp);
    let est = integrate_with_breakpoints(density, &points, Tolerance::relative(1e-10))?;

    let max_slope = kind.slope_at(lo).max(kind.slope_at(hi)).max(kind.slope_at(0.0));
    Ok(AdiabaticEstimate {
        mutual_information: prefactor * k.k2 * est.value,
        max_slope,
        slope_warning: max_slope > MAX_ADIABATIC_SLOPE,
    })
}
