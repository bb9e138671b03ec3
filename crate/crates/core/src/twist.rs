//! The Gaussian twist-operator ansatz as a boundary-element engine.
//!
//! With Gaussian correlations the replica derivative of `tr rho^n` becomes a
//! double integral over the region's boundary,
//! `S = norm_alpha \int\int n_1 . n_2 / |x_1 - x_2|^{2(d-1)}`,
//! and the mutual information of two regions is the same integral taken
//! across the two boundaries. `norm_alpha` stands for the theory-dependent
//! replica derivative of `alpha_n^2 / 2` and defaults to 1.
//!
//! Self-integrals need a short-distance cutoff `epsilon`. Pairs closer than
//! `epsilon` are excluded; panels straddling the cutoff contribute the
//! fraction of their extent that lies outside it. Pairs within a few panel
//! sizes of the cutoff are refined by splitting both panels into sub-panels
//! in their tangent planes, which removes most of the midpoint-rule bias of
//! the steep kernel. Cross-integrals need no cutoff.
//!
//! Panel sums are split into rows so a caller can evaluate rows in parallel;
//! [`SelfIntegral::combine`] and [`CrossIntegral::combine`] reduce them in a
//! fixed order, so the result does not depend on how rows were scheduled.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::positive;
use crate::geometry::{distance, dot, BoundaryMesh, Panel, SpatialDim, Vec3};
use crate::lstsq::least_squares;
use crate::quadrature::{integrate, integrate_with_breakpoints, Tolerance};
use crate::sum::pairwise_sum;
use crate::{Error, Result};

/// Panels may be at most this fraction of the cutoff.
pub const RESOLUTION_RATIO: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistKernelConfig {
    dim: SpatialDim,
    include_transverse_term: bool,
    norm_alpha: f64,
}

impl TwistKernelConfig {
    pub fn new(dim: SpatialDim) -> Result<Self> {
        if dim.get() < 2 {
            return Err(Error::Dimension {
                dim: dim.get(),
                reason: "is not supported by the twist kernel (need d = 2 or 3)",
            });
        }
        Ok(TwistKernelConfig { dim, include_transverse_term: false, norm_alpha: 1.0 })
    }

    /// Adds `(n_1 . x)(n_2 . x) / |x|^{2(d-1)}` (unit vector `x` along the
    /// separation) to the kernel.
    pub fn with_transverse_term(mut self, on: bool) -> Self {
        self.include_transverse_term = on;
        self
    }

    pub fn with_norm_alpha(mut self, norm_alpha: f64) -> Result<Self> {
        self.norm_alpha = positive("norm_alpha", norm_alpha)?;
        Ok(self)
    }

    pub fn dim(&self) -> SpatialDim {
        self.dim
    }

    pub fn include_transverse_term(&self) -> bool {
        self.include_transverse_term
    }

    pub fn norm_alpha(&self) -> f64 {
        self.norm_alpha
    }

    fn check_mesh(&self, mesh: &BoundaryMesh) -> Result<()> {
        if mesh.dim() != self.dim {
            return Err(Error::Dimension {
                dim: mesh.dim().get(),
                reason: "mesh dimension differs from the kernel configuration",
            });
        }
        Ok(())
    }

    fn require_dim(&self, d: u8, reason: &'static str) -> Result<()> {
        if self.dim.get() != d {
            return Err(Error::Dimension { dim: self.dim.get(), reason });
        }
        Ok(())
    }
}

/// `|x|^{-2(d-1)}`.
fn inverse_power(sep: f64, dim: SpatialDim) -> f64 {
    let s2 = sep * sep;
    match dim.get() {
        2 => 1.0 / s2,
        _ => 1.0 / (s2 * s2),
    }
}

/// The delta-term kernel `normal_dot / separation^{2(d-1)}`.
pub fn kernel(separation: f64, normal_dot: f64, cfg: &TwistKernelConfig) -> Result<f64> {
    let sep = positive("separation", separation)?;
    Ok(normal_dot * inverse_power(sep, cfg.dim))
}

/// Kernel including the transverse term when the configuration enables it.
/// `n1_along` and `n2_along` are the normals projected on the unit separation
/// vector.
pub fn kernel_with_transverse(
    separation: f64,
    normal_dot: f64,
    n1_along: f64,
    n2_along: f64,
    cfg: &TwistKernelConfig,
) -> Result<f64> {
    let transverse = if cfg.include_transverse_term { n1_along * n2_along } else { 0.0 };
    kernel(separation, normal_dot + transverse, cfg)
}

// Kernel numerator for a panel pair; symmetric in (p, q) bit for bit.
fn numerator(p: &Panel, q: &Panel, sep: f64, cfg: &TwistKernelConfig) -> f64 {
    numerator_at(&p.normal, &q.normal, &p.midpoint, &q.midpoint, sep, cfg)
}

fn numerator_at(n1: &Vec3, n2: &Vec3, x1: &Vec3, x2: &Vec3, sep: f64, cfg: &TwistKernelConfig) -> f64 {
    let nd = dot(n1, n2);
    if !cfg.include_transverse_term {
        return nd;
    }
    let dx = [x2[0] - x1[0], x2[1] - x1[1], x2[2] - x1[2]];
    nd + dot(n1, &dx) * dot(n2, &dx) / (sep * sep)
}

/// Pairs closer than `epsilon + NEAR_ZONE (h_i + h_j)` are refined.
const NEAR_ZONE: f64 = 4.0;

/// Sub-panels per side for pairs that straddle the cutoff.
fn subdivisions(dim: SpatialDim) -> usize {
    match dim.get() {
        2 => 4,
        _ => 3,
    }
}

/// Unit tangent axes of a panel; the second is zero for d = 2.
fn tangent_axes(panel: &Panel, dim: SpatialDim) -> [Vec3; 2] {
    let n = panel.normal;
    if dim.get() == 2 {
        return [[-n[1], n[0], 0.0], [0.0; 3]];
    }
    // Any unit vector orthogonal to n, then the third axis.
    let a = if n[0].abs() < 0.6 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let along = dot(&a, &n);
    let e1 = [a[0] - along * n[0], a[1] - along * n[1], a[2] - along * n[2]];
    let norm = libm::sqrt(dot(&e1, &e1));
    let e1 = [e1[0] / norm, e1[1] / norm, e1[2] / norm];
    let e2 = [n[1] * e1[2] - n[2] * e1[1], n[2] * e1[0] - n[0] * e1[2], n[0] * e1[1] - n[1] * e1[0]];
    [e1, e2]
}

/// Points `c + u e_1 (+ v e_2)` for every combination of `offsets`.
fn tangent_grid(c: &Vec3, axes: &[Vec3; 2], offsets: &[f64], dim: SpatialDim, out: &mut Vec<Vec3>) {
    let [e1, e2] = axes;
    if dim.get() == 2 {
        out.extend(offsets.iter().map(|&u| [c[0] + u * e1[0], c[1] + u * e1[1], c[2]]));
        return;
    }
    for &u in offsets {
        for &v in offsets {
            out.push([c[0] + u * e1[0] + v * e2[0], c[1] + u * e1[1] + v * e2[1], c[2] + u * e1[2] + v * e2[2]]);
        }
    }
}

/// Tail of `Z = X + Y` with `X`, `Y` uniform on `[-a/2, a/2]`, `[-b/2, b/2]`:
/// returns `(P(Z > t), E[Z; Z > t])`.
fn trapezoid_tail(a: f64, b: f64, t: f64) -> (f64, f64) {
    let (a, b) = if a >= b { (a, b) } else { (b, a) };
    let (ha, hb) = (0.5 * a, 0.5 * b);
    if t < 0.0 {
        let (g, m) = trapezoid_tail(a, b, -t);
        return (1.0 - g, m);
    }
    if t >= ha + hb {
        return (0.0, 0.0);
    }
    if b <= 1e-12 * a {
        return ((ha - t) / a, (ha * ha - t * t) / (2.0 * a));
    }
    let s = ha + hb;
    let ramp = |t: f64| {
        let g = (s - t) * (s - t) / (2.0 * a * b);
        let m = (s * s * s / 6.0 - s * t * t / 2.0 + t * t * t / 3.0) / (a * b);
        (g, m)
    };
    let inner = ha - hb;
    if t >= inner {
        return ramp(t);
    }
    let (g, m) = ramp(inner);
    (g + (inner - t) / a, m + (inner * inner - t * t) / (2.0 * a))
}

/// Averaging `r^{-2k}` over two flat panels of side `h` in a k-dimensional
/// surface multiplies it by `1 + c (h_1^2 + h_2^2) / r^2` to second order,
/// with `c = k (k + 2) / 12`.
fn midpoint_bias(dim: SpatialDim) -> f64 {
    let k = dim.as_f64() - 1.0;
    k * (k + 2.0) / 12.0
}

/// Per-panel quadrature points for near pairs: a two-point Gauss product
/// rule, and a finer midpoint grid for pairs that straddle the cutoff.
#[derive(Debug, Clone)]
struct NearField {
    sizes: Vec<f64>,
    axes: Vec<[Vec3; 2]>,
    gauss: Vec<Vec3>,
    gauss_per_panel: usize,
    grid: Vec<Vec3>,
    grid_per_panel: usize,
    subdivisions: usize,
    midpoint_bias: f64,
    half_diagonal: f64,
}

impl NearField {
    fn new(mesh: &BoundaryMesh, dim: SpatialDim) -> Self {
        let m = subdivisions(dim);
        let sizes: Vec<f64> = (0..mesh.len()).map(|i| mesh.panel_size(i)).collect();
        let mut gauss = Vec::new();
        let mut grid = Vec::new();
        let axes: Vec<[Vec3; 2]> = mesh.panels().iter().map(|p| tangent_axes(p, dim)).collect();
        let g = 0.5 / libm::sqrt(3.0);
        for ((p, &h), e) in mesh.panels().iter().zip(&sizes).zip(&axes) {
            tangent_grid(&p.midpoint, e, &[-g * h, g * h], dim, &mut gauss);
            let offsets: Vec<f64> = (0..m).map(|k| h * ((k as f64 + 0.5) / m as f64 - 0.5)).collect();
            tangent_grid(&p.midpoint, e, &offsets, dim, &mut grid);
        }
        let panels = mesh.len().max(1);
        NearField {
            gauss_per_panel: gauss.len() / panels,
            grid_per_panel: grid.len() / panels,
            sizes,
            axes,
            gauss,
            grid,
            subdivisions: m,
            midpoint_bias: midpoint_bias(dim),
            half_diagonal: 0.5 * libm::sqrt(dim.as_f64() - 1.0),
        }
    }

    fn gauss(&self, i: usize) -> &[Vec3] {
        &self.gauss[i * self.gauss_per_panel..(i + 1) * self.gauss_per_panel]
    }

    fn grid(&self, i: usize) -> &[Vec3] {
        &self.grid[i * self.grid_per_panel..(i + 1) * self.grid_per_panel]
    }
}

/// Partial sum over one panel's partners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSum {
    pub value: f64,
    pub min_separation: f64,
}

/// Cutoff-regulated self-integral of one mesh, evaluated row by row.
#[derive(Debug, Clone)]
pub struct SelfIntegral<'a> {
    mesh: &'a BoundaryMesh,
    epsilon: f64,
    cfg: TwistKernelConfig,
    near: NearField,
}

impl<'a> SelfIntegral<'a> {
    /// Checks `epsilon < diameter / 10` and that every panel is at most
    /// `epsilon / 4` across.
    pub fn new(mesh: &'a BoundaryMesh, epsilon: f64, cfg: &TwistKernelConfig) -> Result<Self> {
        cfg.check_mesh(mesh)?;
        let epsilon = positive("epsilon", epsilon)?;
        let diameter = mesh.diameter();
        if epsilon >= diameter / 10.0 {
            return Err(Error::domain(
                "epsilon",
                format!("cutoff {epsilon} must be below a tenth of the mesh diameter {diameter}"),
            ));
        }
        let limit = RESOLUTION_RATIO * epsilon;
        if mesh.max_panel_size() > limit {
            let per_length = mesh.total_measure() / libm::pow(limit, cfg.dim.as_f64() - 1.0);
            return Err(Error::Resolution { epsilon, required_panels: libm::ceil(per_length) as usize });
        }
        Ok(SelfIntegral { mesh, epsilon, cfg: *cfg, near: NearField::new(mesh, cfg.dim) })
    }

    pub fn rows(&self) -> usize {
        self.mesh.len()
    }

    pub fn row(&self, i: usize) -> Result<RowSum> {
        let panels = self.mesh.panels();
        let p = &panels[i];
        let h_i = self.near.sizes[i];
        let mut terms = Vec::with_capacity(panels.len());
        let mut min_separation = f64::INFINITY;
        for (j, q) in panels.iter().enumerate() {
            if j == i {
                continue;
            }
            let sep = distance(&p.midpoint, &q.midpoint);
            if sep == 0.0 {
                return Err(Error::ZeroSeparation { i, j });
            }
            min_separation = min_separation.min(sep);
            let reach = h_i + self.near.sizes[j];
            // Largest offset of any panel point from its midpoint, summed.
            let corners = self.near.half_diagonal * reach;
            let value = if sep >= self.epsilon + NEAR_ZONE * reach {
                let spread = self.near.midpoint_bias * (h_i * h_i + self.near.sizes[j] * self.near.sizes[j]);
                numerator(p, q, sep, &self.cfg) * inverse_power(sep, self.cfg.dim) * (1.0 + spread / (sep * sep))
            } else if sep >= self.epsilon + corners {
                self.gauss_pair(i, j)
            } else if sep + corners > self.epsilon {
                self.straddling_pair(i, j)
            } else {
                continue;
            };
            terms.push(p.weight * q.weight * value);
        }
        Ok(RowSum { value: pairwise_sum(&terms), min_separation })
    }

    // Mean kernel over both panels; every point pair clears the cutoff.
    fn gauss_pair(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (&self.mesh.panels()[i], &self.mesh.panels()[j]);
        let (a, b) = (self.near.gauss(i), self.near.gauss(j));
        let mut acc = Vec::with_capacity(a.len() * b.len());
        for x1 in a {
            for x2 in b {
                let d = distance(x1, x2);
                acc.push(numerator_at(&p.normal, &q.normal, x1, x2, d, &self.cfg) * inverse_power(d, self.cfg.dim));
            }
        }
        pairwise_sum(&acc) / acc.len() as f64
    }

    // Mean kernel over sub-panel pairs. Each point of panel i sees a square
    // sub-panel of j; the part of it beyond the cutoff (a straight cut
    // locally) is weighted in closed form and evaluated at its mean distance.
    fn straddling_pair(&self, i: usize, j: usize) -> f64 {
        let (p, q) = (&self.mesh.panels()[i], &self.mesh.panels()[j]);
        let (a, b) = (self.near.grid(i), self.near.grid(j));
        let [e1, e2] = &self.near.axes[j];
        let m = self.near.subdivisions as f64;
        let (h1, h2) = (self.near.sizes[i] / m, self.near.sizes[j] / m);
        let spread = self.near.midpoint_bias * (h1 * h1 + h2 * h2);
        let dim = self.cfg.dim;
        let mut acc = Vec::with_capacity(a.len() * b.len());
        for x1 in a {
            for x2 in b {
                let d = distance(x1, x2);
                let dir = [(x2[0] - x1[0]) / d, (x2[1] - x1[1]) / d, (x2[2] - x1[2]) / d];
                let (wa, wb) = (h2 * dot(&dir, e1).abs(), h2 * dot(&dir, e2).abs());
                let num = numerator_at(&p.normal, &q.normal, x1, x2, d, &self.cfg);
                let k = if d - self.epsilon >= 0.5 * (wa + wb) {
                    inverse_power(d, dim) * (1.0 + spread / (d * d))
                } else {
                    let (g, mean) = trapezoid_tail(wa, wb, self.epsilon - d);
                    if g <= 0.0 {
                        0.0
                    } else {
                        g * inverse_power(d + mean / g, dim)
                    }
                };
                acc.push(num * k);
            }
        }
        pairwise_sum(&acc) / acc.len() as f64
    }

    pub fn combine(&self, rows: &[RowSum]) -> Result<f64> {
        if rows.len() != self.rows() {
            return Err(Error::domain("rows", format!("expected {} row sums, got {}", self.rows(), rows.len())));
        }
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        Ok(self.cfg.norm_alpha * pairwise_sum(&values))
    }

    pub fn evaluate(&self) -> Result<f64> {
        let rows = (0..self.rows()).map(|i| self.row(i)).collect::<Result<Vec<_>>>()?;
        self.combine(&rows)
    }
}

/// `norm_alpha sum_{i != j, |x_i - x_j| >= epsilon} w_i w_j K_ij`.
pub fn self_entropy_integral(mesh: &BoundaryMesh, epsilon: f64, cfg: &TwistKernelConfig) -> Result<f64> {
    SelfIntegral::new(mesh, epsilon, cfg)?.evaluate()
}

/// Cross-boundary integral between two meshes, evaluated row by row.
///
/// Rows `0..a.len()` sum over `b` for each panel of `a`; the remaining rows
/// do the reverse. The result averages the two orders so swapping the meshes
/// gives the identical value.
#[derive(Debug, Clone)]
pub struct CrossIntegral<'a> {
    a: &'a BoundaryMesh,
    b: &'a BoundaryMesh,
    cfg: TwistKernelConfig,
}

impl<'a> CrossIntegral<'a> {
    pub fn new(a: &'a BoundaryMesh, b: &'a BoundaryMesh, cfg: &TwistKernelConfig) -> Result<Self> {
        cfg.check_mesh(a)?;
        cfg.check_mesh(b)?;
        Ok(CrossIntegral { a, b, cfg: *cfg })
    }

    pub fn rows(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub fn row(&self, r: usize) -> Result<RowSum> {
        let (own, other, index) =
            if r < self.a.len() { (self.a, self.b, r) } else { (self.b, self.a, r - self.a.len()) };
        let p = &own.panels()[index];
        let mut terms = Vec::with_capacity(other.len());
        let mut min_separation = f64::INFINITY;
        for (j, q) in other.panels().iter().enumerate() {
            let sep = distance(&p.midpoint, &q.midpoint);
            if sep == 0.0 {
                return Err(Error::ZeroSeparation { i: index, j });
            }
            min_separation = min_separation.min(sep);
            terms.push((p.weight * q.weight) * numerator(p, q, sep, &self.cfg) * inverse_power(sep, self.cfg.dim));
        }
        Ok(RowSum { value: pairwise_sum(&terms), min_separation })
    }

    pub fn combine(&self, rows: &[RowSum]) -> Result<f64> {
        if rows.len() != self.rows() {
            return Err(Error::domain("rows", format!("expected {} row sums, got {}", self.rows(), rows.len())));
        }
        let min_separation = rows.iter().map(|r| r.min_separation).fold(f64::INFINITY, f64::min);
        let panel_size = self.a.max_panel_size().max(self.b.max_panel_size());
        if min_separation < panel_size {
            return Err(Error::Proximity { min_separation, panel_size });
        }
        let (ra, rb) = rows.split_at(self.a.len());
        let sa = pairwise_sum(&ra.iter().map(|r| r.value).collect::<Vec<_>>());
        let sb = pairwise_sum(&rb.iter().map(|r| r.value).collect::<Vec<_>>());
        // Facing boundaries have opposite normals; the sign makes that positive.
        Ok(-self.cfg.norm_alpha * 0.5 * (sa + sb))
    }

    pub fn evaluate(&self) -> Result<f64> {
        let rows = (0..self.rows()).map(|r| self.row(r)).collect::<Result<Vec<_>>>()?;
        self.combine(&rows)
    }
}

/// Mutual information of the regions bounded by `a` and `b`.
pub fn cross_mutual_information(a: &BoundaryMesh, b: &BoundaryMesh, cfg: &TwistKernelConfig) -> Result<f64> {
    CrossIntegral::new(a, b, cfg)?.evaluate()
}

/// Leading far-field mutual information of two closed regions of measures
/// `measure_a`, `measure_b` at distance `r`: the boundary fluxes vanish, so
/// the first surviving term is `2d(d-1) norm_alpha V_a V_b / r^{2d}`.
pub fn far_field_mutual_information(measure_a: f64, measure_b: f64, r: f64, cfg: &TwistKernelConfig) -> Result<f64> {
    let va = positive("measure_a", measure_a)?;
    let vb = positive("measure_b", measure_b)?;
    let r = positive("r", r)?;
    let d = cfg.dim.as_f64();
    Ok(2.0 * d * (d - 1.0) * cfg.norm_alpha * va * vb / libm::pow(r, 2.0 * d))
}

const REDUCED_TOL: Tolerance = Tolerance::relative(1e-12);

fn check_reduced(radius: f64, epsilon: f64) -> Result<f64> {
    let radius = positive("R", radius)?;
    let epsilon = positive("epsilon", epsilon)?;
    if epsilon >= radius / 10.0 {
        return Err(Error::domain("epsilon", format!("cutoff {epsilon} must be below R/10 = {}", radius / 10.0)));
    }
    Ok(epsilon / radius)
}

// Numerator for two boundary points at angular separation theta on a circle
// or a great circle: n1.n2 = cos(theta), (n1.x)(n2.x) = -sin^2(theta/2).
fn angular_numerator(theta: f64, cfg: &TwistKernelConfig) -> f64 {
    let c = libm::cos(theta);
    if cfg.include_transverse_term {
        let s = libm::sin(0.5 * theta);
        c - s * s
    } else {
        c
    }
}

/// Circle self-integral reduced by rotation symmetry to
/// `4 pi \int_{epsilon/R}^{pi} num(theta) / (4 sin^2(theta/2)) dtheta`.
/// It depends on `R` and `epsilon` only through their ratio.
pub fn circle_entropy_reduced(radius: f64, epsilon: f64, cfg: &TwistKernelConfig) -> Result<f64> {
    cfg.require_dim(2, "circle entropy needs d = 2")?;
    let lower = check_reduced(radius, epsilon)?;
    // theta = e^t flattens the 1/theta^2 growth.
    let f = |t: f64| {
        let theta = libm::exp(t);
        let s = libm::sin(0.5 * theta);
        theta * angular_numerator(theta, cfg) / (4.0 * s * s)
    };
    let est = integrate(f, libm::log(lower), libm::log(PI), REDUCED_TOL)?;
    Ok(cfg.norm_alpha * 4.0 * PI * est.value)
}

/// Sphere self-integral reduced to
/// `(pi^2 / 2) \int_{epsilon/R}^{pi} sin(theta) num(theta) / sin^4(theta/2) dtheta`,
/// the `8 pi^2 R^4` measure of the double surface integral divided by the
/// `16 R^4` of the kernel.
pub fn sphere_entropy_reduced(radius: f64, epsilon: f64, cfg: &TwistKernelConfig) -> Result<f64> {
    cfg.require_dim(3, "sphere entropy needs d = 3")?;
    let lower = check_reduced(radius, epsilon)?;
    let f = |t: f64| {
        let theta = libm::exp(t);
        let s = libm::sin(0.5 * theta);
        let s2 = s * s;
        theta * libm::sin(theta) * angular_numerator(theta, cfg) / (s2 * s2)
    };
    let est = integrate(f, libm::log(lower), libm::log(PI), REDUCED_TOL)?;
    Ok(cfg.norm_alpha * 0.5 * PI * PI * est.value)
}

/// `S = coeff_power (R/eps)^{d-1} + coeff_log ln(R/eps) + coeff_const + coeff_linear eps/R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyFitResult {
    pub coeff_power: f64,
    pub coeff_log: f64,
    pub coeff_const: f64,
    pub coeff_linear: f64,
    pub residual_rms: f64,
    /// Range of `epsilon / R` covered by the samples.
    pub window: (f64, f64),
}

/// Least-squares fit of `(epsilon / R, S)` samples to the smooth-boundary
/// expansion.
pub fn fit_entropy(dim: SpatialDim, samples: &[(f64, f64)]) -> Result<EntropyFitResult> {
    if samples.len() < 5 {
        return Err(Error::InsufficientData(format!("entropy fit needs at least 5 samples, got {}", samples.len())));
    }
    let p = dim.as_f64() - 1.0;
    let mut cols = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    let mut y = Vec::with_capacity(samples.len());
    for &(ratio, s) in samples {
        positive("epsilon/R", ratio)?;
        cols[0].push(libm::pow(1.0 / ratio, p));
        cols[1].push(-libm::log(ratio));
        cols[2].push(1.0);
        cols[3].push(ratio);
        y.push(s);
    }
    let fit = least_squares(&cols, &y)?;
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    Ok(EntropyFitResult {
        coeff_power: fit.coefficients[0],
        coeff_log: fit.coefficients[1],
        coeff_const: fit.coefficients[2],
        coeff_linear: fit.coefficients[3],
        residual_rms: fit.residual_rms,
        window: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedShape {
    Circle,
    Sphere,
}

/// Samples the reduced circle or sphere entropy on `points` log-spaced values
/// of `epsilon / R` in `[lo, hi]` and fits the expansion.
pub fn fit_reduced_entropy(
    shape: ReducedShape,
    radius: f64,
    window: (f64, f64),
    points: usize,
    cfg: &TwistKernelConfig,
) -> Result<EntropyFitResult> {
    let (lo, hi) = window;
    positive("window", lo)?;
    if !(hi > lo) {
        return Err(Error::domain("window", format!("need lo < hi, got ({lo}, {hi})")));
    }
    if points < 5 {
        return Err(Error::InsufficientData(format!("need at least 5 points, got {points}")));
    }
    let step = libm::log(hi / lo) / (points - 1) as f64;
    let mut samples = Vec::with_capacity(points);
    for k in 0..points {
        let ratio = lo * libm::exp(step * k as f64);
        let s = match shape {
            ReducedShape::Circle => circle_entropy_reduced(radius, ratio * radius, cfg)?,
            ReducedShape::Sphere => sphere_entropy_reduced(radius, ratio * radius, cfg)?,
        };
        samples.push((ratio, s));
    }
    let dim = match shape {
        ReducedShape::Circle => SpatialDim::TWO,
        ReducedShape::Sphere => SpatialDim::THREE,
    };
    fit_entropy(dim, &samples)
}

const WEDGE_TOL: Tolerance = Tolerance::relative(1e-12).with_max_intervals(8000);
/// Number of cutoffs in the wedge ladder; each halves the previous one.
pub const WEDGE_LADDER: usize = 12;
const WEDGE_FIRST_CUTOFF: f64 = 1e-3;

fn check_theta(theta: f64) -> Result<f64> {
    if theta > 0.0 && theta < PI {
        Ok(theta)
    } else {
        Err(Error::domain("theta", format!("must lie in (0, pi), got {theta}")))
    }
}

/// `\int_0^L ds \int_0^L dt 1/(s^2 + t^2 + 2 s t cos(theta))` over pairs at
/// distance at least `epsilon`: the cross-arm integral of two arms whose
/// directions differ from a straight line by `theta`.
fn cross_arm(theta: f64, arm: f64, epsilon: f64) -> Result<f64> {
    let (sin_t, cos_t) = libm::sincos(theta);
    // \int_{t0}^{t1} dt / ((t + s c)^2 + (s sin)^2), via the atan difference.
    let piece = |s: f64, t0: f64, t1: f64| -> f64 {
        if t1 <= t0 {
            return 0.0;
        }
        let q = s * sin_t;
        let (u0, u1) = (t0 + s * cos_t, t1 + s * cos_t);
        if q == 0.0 {
            (t1 - t0) / (u0 * u1)
        } else {
            libm::atan2((t1 - t0) * q, q * q + u0 * u1) / q
        }
    };
    let inner = |s: f64| -> f64 {
        let r2 = epsilon * epsilon - s * s * sin_t * sin_t;
        if r2 <= 0.0 {
            return piece(s, 0.0, arm);
        }
        let r = libm::sqrt(r2);
        let (lo, hi) = (-s * cos_t - r, -s * cos_t + r);
        piece(s, 0.0, lo.min(arm)) + piece(s, hi.max(0.0), arm)
    };
    let near = integrate_with_breakpoints(inner, &[0.0, epsilon], WEDGE_TOL)?.value;
    // s = e^u on [epsilon, arm], where the integrand falls like 1/s.
    let mut points = alloc::vec![libm::log(epsilon), libm::log(arm)];
    if sin_t > 0.0 && epsilon / sin_t < arm && epsilon / sin_t > epsilon {
        points.insert(1, libm::log(epsilon / sin_t));
    }
    let far = integrate_with_breakpoints(
        |u: f64| {
            let s = libm::exp(u);
            s * inner(s)
        },
        &points,
        WEDGE_TOL,
    )?
    .value;
    Ok(near + far)
}

/// Corner part of the wedge self-integral (delta term, `norm_alpha = 1`):
/// the cross-arm contribution of arms bent by `theta` minus that of the
/// straight line, `2 cos(theta) X(theta) - 2 X(0)`. Same-arm pairs and arm
/// ends are identical in both and cancel.
pub fn wedge_corner_integral(theta: f64, arm_length: f64, epsilon: f64) -> Result<f64> {
    let theta = check_theta(theta)?;
    let arm = positive("arm_length", arm_length)?;
    let epsilon = positive("epsilon", epsilon)?;
    if epsilon >= arm / 10.0 {
        return Err(Error::domain("epsilon", format!("cutoff {epsilon} must be below arm_length/10")));
    }
    Ok(2.0 * libm::cos(theta) * cross_arm(theta, arm, epsilon)? - 2.0 * cross_arm(0.0, arm, epsilon)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WedgeFit {
    /// Coefficient of `ln(1/epsilon)`, times `norm_alpha`.
    pub log_coefficient: f64,
    pub residual_rms: f64,
    /// Cutoffs that entered the final fit.
    pub cutoffs: Vec<f64>,
}

fn fit_ladder(cutoffs: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let cols = [
        cutoffs.iter().map(|_| 1.0).collect::<Vec<_>>(),
        cutoffs.iter().map(|e| -libm::log(*e)).collect(),
        cutoffs.to_vec(),
    ];
    let fit = least_squares(&cols, values)?;
    Ok((fit.coefficients[1], fit.residual_rms))
}

/// Fits `a + b ln(1/epsilon) + c epsilon` to the corner integral on the
/// cutoff ladder `epsilon_k = 1e-3 arm_length / 2^k`, `k < 12`. If the fit
/// residual suggests the smallest cutoffs are no longer resolved, those two
/// are dropped and the better fit is kept.
pub fn wedge_log_fit(theta: f64, arm_length: f64, cfg: &TwistKernelConfig) -> Result<WedgeFit> {
    cfg.require_dim(2, "wedge corners need d = 2")?;
    let theta = check_theta(theta)?;
    let arm = positive("arm_length", arm_length)?;
    let cutoffs: Vec<f64> = (0..WEDGE_LADDER).map(|k| arm * WEDGE_FIRST_CUTOFF / libm::ldexp(1.0, k as i32)).collect();
    let values = cutoffs.iter().map(|&e| wedge_corner_integral(theta, arm, e)).collect::<Result<Vec<_>>>()?;
    let (mut b, mut rms) = fit_ladder(&cutoffs, &values)?;
    let mut used = cutoffs.clone();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if rms > 1e-9 * scale {
        let keep = WEDGE_LADDER - 2;
        let (b2, rms2) = fit_ladder(&cutoffs[..keep], &values[..keep])?;
        if rms2 < rms {
            b = b2;
            rms = rms2;
            used.truncate(keep);
        }
    }
    Ok(WedgeFit { log_coefficient: cfg.norm_alpha * b, residual_rms: cfg.norm_alpha * rms, cutoffs: used })
}

/// Logarithmic coefficient of a corner whose arms bend by `theta` away from
/// a straight line, normalized so `theta = pi/2` gives 1. The normalization
/// removes `norm_alpha`.
pub fn wedge_log_coefficient(theta: f64, arm_length: f64, cfg: &TwistKernelConfig) -> Result<f64> {
    let fit = wedge_log_fit(theta, arm_length, cfg)?;
    let reference = wedge_log_fit(0.5 * PI, arm_length, cfg)?;
    Ok(fit.log_coefficient / reference.log_coefficient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize_boundary, ShapeSpec};

    fn cfg2() -> TwistKernelConfig {
        TwistKernelConfig::new(SpatialDim::TWO).unwrap()
    }

    fn cfg3() -> TwistKernelConfig {
        TwistKernelConfig::new(SpatialDim::THREE).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel(2.0, -1.0, &cfg2()).unwrap(), -0.25);
        assert_eq!(kernel(2.0, 1.0, &cfg3()).unwrap(), 1.0 / 16.0);
        assert_eq!(kernel(1.5, 0.0, &cfg2()).unwrap(), 0.0);
        assert!(matches!(kernel(0.0, 1.0, &cfg2()), Err(Error::Domain { param: "separation", .. })));
        let with = cfg2().with_transverse_term(true);
        assert_eq!(kernel_with_transverse(2.0, 0.0, 1.0, 1.0, &with).unwrap(), 0.25);
        assert_eq!(kernel_with_transverse(2.0, 0.0, 1.0, 1.0, &cfg2()).unwrap(), 0.0);
        assert!(TwistKernelConfig::new(SpatialDim::ONE).is_err());
        assert!(cfg2().with_norm_alpha(0.0).is_err());
    }

    // 2 pi cot(a/2) + 2 pi a - 2 pi^2 with a = epsilon/R.
    fn circle_oracle(a: f64) -> f64 {
        2.0 * PI / libm::tan(0.5 * a) + 2.0 * PI * a - 2.0 * PI * PI
    }

    // pi^2/u^2 - pi^2 + 4 pi^2 ln u with u = sin(a/2).
    fn sphere_oracle(a: f64) -> f64 {
        let u = libm::sin(0.5 * a);
        PI * PI / (u * u) - PI * PI + 4.0 * PI * PI * libm::log(u)
    }

    #[test]
    fn reduced_integrals_match_antiderivatives() {
        for a in [1e-4, 1e-3, 3e-2, 0.09] {
            let c = circle_entropy_reduced(1.0, a, &cfg2()).unwrap();
            assert!((c - circle_oracle(a)).abs() / c.abs() < 1e-10, "circle {a}");
            let s = sphere_entropy_reduced(2.0, 2.0 * a, &cfg3()).unwrap();
            assert!((s - sphere_oracle(a)).abs() / s.abs() < 1e-10, "sphere {a}");
        }
        let alpha = cfg2().with_norm_alpha(3.0).unwrap();
        let c = circle_entropy_reduced(1.0, 1e-2, &cfg2()).unwrap();
        assert!((circle_entropy_reduced(1.0, 1e-2, &alpha).unwrap() - 3.0 * c).abs() < 1e-12 * c);
    }

    #[test]
    fn circle_is_scale_invariant_and_sphere_has_log() {
        let a = circle_entropy_reduced(1.0, 1e-3, &cfg2()).unwrap();
        let b = circle_entropy_reduced(2.0, 2e-3, &cfg2()).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let fit = fit_reduced_entropy(ReducedShape::Circle, 1.0, (1e-4, 1e-2), 12, &cfg2()).unwrap();
        assert!((fit.coeff_power - 4.0 * PI).abs() < 1e-6);
        assert!(fit.coeff_log.abs() <= 1e-3 * fit.coeff_power.abs());
        let sphere = fit_reduced_entropy(ReducedShape::Sphere, 1.0, (1e-4, 1e-2), 12, &cfg3()).unwrap();
        assert!((sphere.coeff_log + 4.0 * PI * PI).abs() / (4.0 * PI * PI) < 1e-4);
        assert!(sphere.coeff_power > 0.0);
        assert!(sphere.coeff_log.abs() >= 100.0 * sphere.residual_rms);
    }

    #[test]
    fn reduced_preconditions() {
        assert!(matches!(circle_entropy_reduced(1.0, 0.2, &cfg2()), Err(Error::Domain { param: "epsilon", .. })));
        assert!(matches!(circle_entropy_reduced(1.0, 0.01, &cfg3()), Err(Error::Dimension { .. })));
        assert!(matches!(sphere_entropy_reduced(1.0, 0.01, &cfg2()), Err(Error::Dimension { .. })));
    }

    #[test]
    fn transverse_term_changes_circle_value() {
        let with = cfg2().with_transverse_term(true);
        let a = circle_entropy_reduced(1.0, 1e-2, &cfg2()).unwrap();
        let b = circle_entropy_reduced(1.0, 1e-2, &with).unwrap();
        // The extra numerator -sin^2(theta/2) over 4 sin^2(theta/2) integrates to
        // -(pi - a)/4, times 4 pi.
        assert!((b - a + PI * (PI - 1e-2)).abs() < 1e-9);
    }

    #[test]
    fn circle_mesh_matches_reduced_path() {
        let eps = 0.05;
        let mesh = discretize_boundary(&ShapeSpec::Circle { radius: 1.0 }, 1600, SpatialDim::TWO).unwrap();
        let s_mesh = self_entropy_integral(&mesh, eps, &cfg2()).unwrap();
        let s_red = circle_entropy_reduced(1.0, eps, &cfg2()).unwrap();
        assert!((s_mesh - s_red).abs() / s_red < 5e-3, "{s_mesh} vs {s_red}");
        let mirrored = self_entropy_integral(&mesh.mirrored(), eps, &cfg2()).unwrap();
        assert!((mirrored - s_mesh).abs() <= 1e-12 * s_mesh.abs());
        let finer = self_entropy_integral(&mesh, 0.5 * eps, &cfg2()).unwrap();
        assert!(finer > s_mesh);
    }

    #[test]
    fn resolution_and_cutoff_guards() {
        let mesh = discretize_boundary(&ShapeSpec::Circle { radius: 1.0 }, 64, SpatialDim::TWO).unwrap();
        match self_entropy_integral(&mesh, 0.05, &cfg2()) {
            Err(Error::Resolution { required_panels, .. }) => assert!(required_panels >= 500),
            other => panic!("{other:?}"),
        }
        assert!(matches!(self_entropy_integral(&mesh, 0.5, &cfg2()), Err(Error::Domain { param: "epsilon", .. })));
        assert!(matches!(self_entropy_integral(&mesh, 0.05, &cfg3()), Err(Error::Dimension { .. })));
    }

    #[test]
    fn trapezoid_tail_matches_sampling() {
        // Midpoint sampling of the two uniforms on a fine grid.
        let n = 800;
        for (a, b) in [(1.0, 0.0), (1.0, 0.3), (0.7, 0.7), (0.2, 1.1)] {
            for t in [-0.9, -0.4, -0.1, 0.0, 0.05, 0.3, 0.6, 0.85] {
                let (g, m) = trapezoid_tail(a, b, t);
                let (mut cg, mut cm) = (0.0, 0.0);
                for i in 0..n {
                    for k in 0..n {
                        let z = a * ((i as f64 + 0.5) / n as f64 - 0.5) + b * ((k as f64 + 0.5) / n as f64 - 0.5);
                        if z > t {
                            cg += 1.0;
                            cm += z;
                        }
                    }
                }
                let cells = (n * n) as f64;
                assert!((g - cg / cells).abs() < 3e-3, "a={a} b={b} t={t}: {g} vs {}", cg / cells);
                assert!((m - cm / cells).abs() < 3e-3, "a={a} b={b} t={t}: {m} vs {}", cm / cells);
            }
        }
    }

    #[test]
    fn flat_segment_matches_closed_form() {
        // 2 [L/eps - 1 - ln(L/eps)] for a straight segment of length L.
        let k = 400;
        let h = 1.0 / k as f64;
        let panels = (0..k)
            .map(|i| Panel { midpoint: [(i as f64 + 0.5) * h, 0.0, 0.0], normal: [0.0, 1.0, 0.0], weight: h })
            .collect();
        let mesh = BoundaryMesh::from_panels(SpatialDim::TWO, panels, false).unwrap();
        for eps in [0.02, 0.05, 0.09] {
            let s = self_entropy_integral(&mesh, eps, &cfg2()).unwrap();
            let exact = 2.0 * (1.0 / eps - 1.0 - libm::log(1.0 / eps));
            assert!((s - exact).abs() < 1e-4 * exact, "eps={eps}: {s} vs {exact}");
        }
    }

    #[test]
    fn row_api_matches_evaluate() {
        let mesh = discretize_boundary(&ShapeSpec::Circle { radius: 1.0 }, 400, SpatialDim::TWO).unwrap();
        let job = SelfIntegral::new(&mesh, 0.1, &cfg2()).unwrap();
        let mut rows: Vec<RowSum> = (0..job.rows()).rev().map(|i| job.row(i).unwrap()).collect();
        rows.reverse();
        assert_eq!(job.combine(&rows).unwrap(), job.evaluate().unwrap());
        assert!(job.combine(&rows[1..]).is_err());
    }

    fn segment(x0: f64, length: f64, n: usize, facing_right: bool) -> BoundaryMesh {
        // Right-hand normal of start -> end; pick the direction so the
        // normal points along +x or -x.
        let (start, end) = if facing_right { ([x0, length], [x0, 0.0]) } else { ([x0, 0.0], [x0, length]) };
        discretize_boundary(&ShapeSpec::Segment { start, end }, n, SpatialDim::TWO).unwrap()
    }

    fn flat_oracle(l: f64, x: f64) -> f64 {
        let r = l / x;
        2.0 * (r * libm::atan(r) - 0.5 * libm::log1p(r * r))
    }

    #[test]
    fn parallel_segments_match_closed_form() {
        let a = segment(0.0, 1.0, 3000, true);
        let b = segment(1.0, 1.0, 3000, false);
        let mi = cross_mutual_information(&a, &b, &cfg2()).unwrap();
        let exact = flat_oracle(1.0, 1.0);
        assert!((exact - 0.877_649).abs() < 1e-6);
        assert!((mi - exact).abs() / exact < 1e-6, "{mi} vs {exact}");
        let swapped = cross_mutual_information(&b, &a, &cfg2()).unwrap();
        assert_eq!(mi, swapped);
        let alpha = cfg2().with_norm_alpha(2.5).unwrap();
        let scaled = cross_mutual_information(&a, &b, &alpha).unwrap();
        assert!((scaled - 2.5 * mi).abs() <= 1e-14 * scaled);
    }

    #[test]
    fn touching_meshes_are_rejected() {
        let a = segment(0.0, 1.0, 10, true);
        let b = segment(0.05, 1.0, 10, false);
        assert!(matches!(cross_mutual_information(&a, &b, &cfg2()), Err(Error::Proximity { .. })));
    }

    #[test]
    fn far_field_of_two_circles() {
        let a = discretize_boundary(&ShapeSpec::Circle { radius: 1.0 }, 64, SpatialDim::TWO).unwrap();
        let r = 300.0;
        let b = a.translated([r, 0.0, 0.0]);
        let mi = cross_mutual_information(&a, &b, &cfg2()).unwrap();
        let area = PI;
        let lead = far_field_mutual_information(area, area, r, &cfg2()).unwrap();
        assert!((mi - lead).abs() / lead < 1e-3, "{mi} vs {lead}");
    }

    #[test]
    fn wedge_corner_reference_angle() {
        // theta = pi/2: D = -2 X(0), whose log coefficient is -2.
        let fit = wedge_log_fit(0.5 * PI, 1.0, &cfg2()).unwrap();
        assert!((fit.log_coefficient + 2.0).abs() < 1e-4, "{fit:?}");
        assert!(matches!(wedge_log_fit(PI, 1.0, &cfg2()), Err(Error::Domain { param: "theta", .. })));
        assert!(matches!(wedge_log_fit(0.0, 1.0, &cfg2()), Err(Error::Domain { param: "theta", .. })));
    }

    #[test]
    fn cross_arm_inner_integral_at_zero_angle() {
        // X(0) = \int\int_{s + t >= eps} ds dt / (s + t)^2, with the t integral
        // done by hand.
        let (arm, eps) = (1.0, 1e-2);
        let x = cross_arm(0.0, arm, eps).unwrap();
        let outer = |s: f64| {
            let t0 = (eps - s).max(0.0);
            1.0 / (s + t0) - 1.0 / (s + arm)
        };
        let direct = integrate_with_breakpoints(outer, &[0.0, eps, arm], Tolerance::relative(1e-13)).unwrap().value;
        assert!((x - direct).abs() < 1e-10 * direct);
    }
}
