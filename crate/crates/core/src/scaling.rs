//! Scale integrals, collision-exponent predictions and a divergence
//! classifier for computed mutual-information series.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::positive;
use crate::geometry::SpatialDim;
use crate::lstsq::least_squares;
use crate::quadrature::{integrate_with_breakpoints, Tolerance};
use crate::{Error, Result};

/// Entropy accumulated between `r_uv` and `r_ir` by a region of linear size
/// `length` when each scale contributes `L^{d-1} dr / r^d`:
/// `ln(r_ir / r_uv)` for `d = 1`, otherwise
/// `L^{d-1} (r_uv^{1-d} - r_ir^{1-d}) / (d - 1)`.
pub fn scale_integral_entropy(length: f64, r_uv: f64, r_ir: f64, dim: SpatialDim) -> Result<f64> {
    let length = positive("L", length)?;
    let r_uv = positive("r_uv", r_uv)?;
    let r_ir = positive("r_ir", r_ir)?;
    if r_uv >= r_ir {
        return Err(Error::domain("r_uv", format!("must be below r_ir = {r_ir}, got {r_uv}")));
    }
    if r_ir > length {
        return Err(Error::domain("r_ir", format!("must not exceed L = {length}, got {r_ir}")));
    }
    let d = dim.as_f64();
    if dim.get() == 1 {
        return Ok(libm::log(r_ir / r_uv));
    }
    Ok(libm::pow(length, d - 1.0) * (libm::pow(r_uv, 1.0 - d) - libm::pow(r_ir, 1.0 - d)) / (d - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DivergenceKind {
    Power,
    Log,
    None,
}

impl DivergenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceKind::Power => "power",
            DivergenceKind::Log => "log",
            DivergenceKind::None => "none",
        }
    }
}

impl core::fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollisionKind {
    /// Flat faces of area `volume` (length in d = 2).
    Flat { volume: f64 },
    /// A curved face of radius `radius` approaching a flat one.
    Parabolic { radius: f64 },
    /// A corner with opening slope `slope` approaching a flat face.
    Corner { slope: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionGeometry {
    kind: CollisionKind,
    dim: SpatialDim,
}

impl CollisionGeometry {
    pub fn new(kind: CollisionKind, dim: SpatialDim) -> Result<Self> {
        match kind {
            CollisionKind::Flat { volume } => positive("V", volume)?,
            CollisionKind::Parabolic { radius } => positive("R", radius)?,
            CollisionKind::Corner { slope } => positive("m", slope)?,
        };
        Ok(CollisionGeometry { kind, dim })
    }

    pub fn kind(&self) -> CollisionKind {
        self.kind
    }

    pub fn dim(&self) -> SpatialDim {
        self.dim
    }
}

/// Predicted small-separation behaviour. The coefficient is left at 1: the
/// universal prefactor is not fixed by the scaling argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPrediction {
    pub kind: DivergenceKind,
    /// Power-law exponent; 0 for a log.
    pub exponent: f64,
    pub coefficient: f64,
}

/// Meta flag attached to predictions whose coefficient is symbolic.
pub const PREFACTOR_UNFIXED: &str = "universal-prefactor-unfixed";

/// Flat faces diverge as `x^{-(d-1)}`, a parabola against a plane as
/// `x^{-(d-1)/2}`, and a corner logarithmically. Vanishing exponents
/// (`d = 1`) are logarithms.
pub fn predicted_collision_exponent(geom: &CollisionGeometry) -> CollisionPrediction {
    let d = geom.dim.as_f64();
    let exponent = match geom.kind {
        CollisionKind::Flat { .. } => d - 1.0,
        CollisionKind::Parabolic { .. } => 0.5 * (d - 1.0),
        CollisionKind::Corner { .. } => 0.0,
    };
    let kind = if exponent > 0.0 { DivergenceKind::Power } else { DivergenceKind::Log };
    CollisionPrediction { kind, exponent, coefficient: 1.0 }
}

/// `\int_0^{rho_c} rho^{d-2} / (x + rho^2/R)^{d-1} drho`, the flat-face
/// density integrated over a paraboloid of radius `R` at closest distance `x`.
/// Requires `rho_c >= 10 sqrt(R x)` so the universal part dominates.
pub fn parabolic_collision_integral(radius: f64, x: f64, rho_c: f64, dim: SpatialDim) -> Result<f64> {
    if dim.get() < 2 {
        return Err(Error::Dimension { dim: dim.get(), reason: "has no curved collision (need d >= 2)" });
    }
    let radius = positive("R", radius)?;
    let x = positive("x", x)?;
    let rho_c = positive("rho_c", rho_c)?;
    let core = libm::sqrt(radius * x);
    if rho_c < 10.0 * core {
        return Err(Error::domain("rho_c", format!("must be at least 10 sqrt(R x) = {}", 10.0 * core)));
    }
    // rho = sqrt(R x) u gives (R/x)^{(d-1)/2} \int_0^U u^{d-2} / (1 + u^2)^{d-1} du.
    let d = dim.as_f64();
    let upper = rho_c / core;
    let f = |u: f64| libm::pow(u, d - 2.0) / libm::pow(1.0 + u * u, d - 1.0);
    let mut points = alloc::vec![0.0];
    let mut edge = 1.0;
    while edge < upper {
        points.push(edge);
        edge *= 10.0;
    }
    points.push(upper);
    let est = integrate_with_breakpoints(f, &points, Tolerance::relative(1e-12))?;
    Ok(libm::pow(radius / x, 0.5 * (d - 1.0)) * est.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiLiquidEstimate {
    pub value: f64,
    /// `k_F x < 3`: the separation is not large against the Fermi wavelength.
    pub outside_scaling_window: bool,
    /// `x >= x_ref`: the reference scale no longer bounds the separation.
    pub beyond_reference: bool,
}

/// `coeff k_F^{d-1} V ln(x_ref / x)`. The additive constant is not universal,
/// so `x_ref` is a caller-chosen reference scale.
pub fn fermi_liquid_mi(
    k_f: f64,
    volume: f64,
    x: f64,
    x_ref: f64,
    dim: SpatialDim,
    coeff: f64,
) -> Result<FermiLiquidEstimate> {
    let k_f = positive("k_F", k_f)?;
    let volume = positive("V", volume)?;
    let x = positive("x", x)?;
    let x_ref = positive("x_ref", x_ref)?;
    if !coeff.is_finite() {
        return Err(Error::domain("coeff", format!("must be finite, got {coeff}")));
    }
    let value = coeff * libm::pow(k_f, dim.as_f64() - 1.0) * volume * libm::log(x_ref / x);
    Ok(FermiLiquidEstimate { value, outside_scaling_window: k_f * x < 3.0, beyond_reference: x >= x_ref })
}

/// A computed curve `value(param)` with free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySeries {
    param_name: String,
    points: Vec<(f64, f64)>,
    meta: BTreeMap<String, String>,
}

impl EntropySeries {
    /// Parameters must be positive, finite and strictly increasing; values
    /// finite.
    pub fn new(param_name: impl Into<String>, points: Vec<(f64, f64)>) -> Result<Self> {
        for (k, &(p, v)) in points.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::domain("points", format!("param {p} at row {k} is not a positive number")));
            }
            if !v.is_finite() {
                return Err(Error::domain("points", format!("value at row {k} is not finite")));
            }
        }
        if let Some(k) = points.windows(2).position(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::domain("points", format!("params must increase strictly (rows {k} and {})", k + 1)));
        }
        Ok(EntropySeries { param_name: param_name.into(), points, meta: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.meta.insert(key.into(), value.to_string());
        self
    }

    pub fn insert_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.meta.insert(key.into(), value.to_string());
    }

    pub fn param_name(&self) -> &str {
        &self.param_name
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Result of [`fit_divergence`]. For `Power` the model is
/// `coefficient param^{-exponent} + offset`; for `Log` it is
/// `coefficient ln(1/param) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceFit {
    pub kind: DivergenceKind,
    pub exponent: f64,
    pub coefficient: f64,
    pub offset: f64,
    pub residual_rms: f64,
    pub window: (f64, f64),
    /// Residual of the power model, if it was attempted.
    pub power_rms: Option<f64>,
    pub log_rms: f64,
    pub note: Option<String>,
}

/// Smallest series accepted by [`fit_divergence`].
pub const MIN_FIT_POINTS: usize = 6;
const SCAN_POINTS: usize = 400;
const EXPONENT_RANGE: (f64, f64) = (0.02, 8.0);

struct ModelFit {
    coefficient: f64,
    offset: f64,
    rms: f64,
}

fn linear_fit(basis: &[f64], values: &[f64]) -> Result<ModelFit> {
    let cols = [basis.to_vec(), alloc::vec![1.0; basis.len()]];
    let fit = least_squares(&cols, values)?;
    Ok(ModelFit { coefficient: fit.coefficients[0], offset: fit.coefficients[1], rms: fit.residual_rms })
}

fn power_fit(params: &[f64], values: &[f64], exponent: f64) -> Result<ModelFit> {
    let basis: Vec<f64> = params.iter().map(|p| libm::pow(*p, -exponent)).collect();
    linear_fit(&basis, values)
}

/// Variable projection: for each exponent the coefficient and offset are
/// linear, so only the exponent is searched (log-spaced scan, then golden
/// section around the best scan point).
fn best_power(params: &[f64], values: &[f64]) -> Result<(f64, ModelFit)> {
    let (lo, hi) = EXPONENT_RANGE;
    let ratio = libm::log(hi / lo) / (SCAN_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|k| lo * libm::exp(ratio * k as f64)).collect();
    let mut best = 0;
    let mut best_rms = f64::INFINITY;
    for (k, &p) in grid.iter().enumerate() {
        if let Ok(fit) = power_fit(params, values, p) {
            if fit.rms < best_rms {
                best_rms = fit.rms;
                best = k;
            }
        }
    }
    if !best_rms.is_finite() {
        return Err(Error::Numerical("power model could not be fitted for any exponent".into()));
    }
    let rms_at = |p: f64| power_fit(params, values, p).map(|f| f.rms).unwrap_or(f64::INFINITY);
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(SCAN_POINTS - 1)];
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (rms_at(c), rms_at(d));
    for _ in 0..200 {
        if b - a <= 1e-14 * b {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = rms_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = rms_at(d);
        }
    }
    let mut exponent = 0.5 * (a + b);
    let mut fit = power_fit(params, values, exponent)?;
    if best_rms < fit.rms {
        exponent = grid[best];
        fit = power_fit(params, values, exponent)?;
    }
    Ok((exponent, fit))
}

/// Classifies the small-`param` behaviour of a series as a power law, a
/// logarithm, or neither, choosing the model with the smaller RMS residual.
/// `None` is reported when even the better model misses by more than a tenth
/// of the value range.
pub fn fit_divergence(series: &EntropySeries) -> Result<DivergenceFit> {
    let n = series.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!("need at least {MIN_FIT_POINTS} points, got {n}")));
    }
    let params: Vec<f64> = series.points.iter().map(|p| p.0).collect();
    let values: Vec<f64> = series.points.iter().map(|p| p.1).collect();
    let window = (params[0], params[n - 1]);
    if window.1 < 10.0 * window.0 {
        return Err(Error::InsufficientData(format!(
            "params span [{:e}, {:e}], less than one decade",
            window.0, window.1
        )));
    }

    let logs: Vec<f64> = params.iter().map(|p| -libm::log(*p)).collect();
    let log = linear_fit(&logs, &values)?;
    let log_rms = log.rms;

    let mut note = None;
    let power = if values.iter().any(|v| *v <= 0.0) {
        note = Some("nonpositive values: power model skipped".to_string());
        None
    } else {
        Some(best_power(&params, &values)?)
    };

    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let range = max - min;
    let power_rms = power.as_ref().map(|(_, f)| f.rms);
    let (mut kind, exponent, chosen) = match power {
        Some((p, fit)) if fit.rms < log.rms => (DivergenceKind::Power, p, fit),
        _ => (DivergenceKind::Log, 0.0, log),
    };
    if ![chosen.coefficient, chosen.offset, chosen.rms].iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical(format!("{} model is not finite; values overflow the fit", kind.as_str())));
    }
    if chosen.rms > 0.1 * range || (kind == DivergenceKind::Power && !(exponent > 0.0)) {
        kind = DivergenceKind::None;
    }
    Ok(DivergenceFit {
        kind,
        exponent,
        coefficient: chosen.coefficient,
        offset: chosen.offset,
        residual_rms: chosen.rms,
        window,
        power_rms,
        log_rms,
        note,
    })
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    let lo = positive("from", lo)?;
    let hi = positive("to", hi)?;
    if !(hi > lo) {
        return Err(Error::domain("to", format!("must exceed from = {lo}, got {hi}")));
    }
    if n < 2 {
        return Err(Error::domain("points", format!("need at least 2, got {n}")));
    }
    let step = libm::log(hi / lo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|k| lo * libm::exp(step * k as f64)).collect();
    out[n - 1] = hi;
    Ok(out)
}
