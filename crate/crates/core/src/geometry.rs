//! Regions and their discretized boundaries.
//!
//! All lengths are dimensionless; callers fix the unit. Boundaries are cut into
//! midpoint-rule panels whose normals come from the shape's parametrization.
//! Points and normals are stored as 3-vectors; unused components are zero.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::{Error, Result};

pub type Vec3 = [f64; 3];

pub(crate) fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Spatial dimension `d` of the field theory, `1 <= d <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpatialDim(u8);

impl SpatialDim {
    pub const ONE: SpatialDim = SpatialDim(1);
    pub const TWO: SpatialDim = SpatialDim(2);
    pub const THREE: SpatialDim = SpatialDim(3);

    pub fn new(d: u8) -> Result<Self> {
        match d {
            1..=3 => Ok(SpatialDim(d)),
            _ => Err(Error::Dimension { dim: d, reason: "is outside the supported range 1..=3" }),
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

/// A region, described by the parameters of its boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    /// `[a, b]` on the line (d = 1).
    Interval { a: f64, b: f64 },
    /// Rectangle `[-w/2, w/2] x [-L/2, L/2]` (d = 2).
    Strip { width: f64, length: f64 },
    /// Circle of radius `radius` about the origin (d = 2).
    Circle { radius: f64 },
    /// Sphere of radius `radius` about the origin (d = 3).
    Sphere { radius: f64 },
    /// Two straight arms of length `arm_length` leaving the origin at angles
    /// `+-opening/2` from the +x axis; the region is the sector between them
    /// (d = 2). Open boundary.
    Wedge { opening: f64, arm_length: f64 },
    /// Open straight segment; the normal is the right-hand perpendicular of
    /// `end - start` (d = 2).
    Segment { start: [f64; 2], end: [f64; 2] },
    /// Closed, simple polygon (d = 2). Either orientation is accepted; normals
    /// always point out of the enclosed area.
    Polyline { vertices: Vec<[f64; 2]> },
}

impl ShapeSpec {
    /// Reflection `x -> -x`.
    pub fn mirrored(&self) -> ShapeSpec {
        match self {
            ShapeSpec::Interval { a, b } => ShapeSpec::Interval { a: -b, b: -a },
            ShapeSpec::Segment { start, end } => ShapeSpec::Segment {
                // Swap ends so the mirrored normal is the mirror of the normal.
                start: [-end[0], end[1]],
                end: [-start[0], start[1]],
            },
            ShapeSpec::Polyline { vertices } => {
                ShapeSpec::Polyline { vertices: vertices.iter().map(|v| [-v[0], v[1]]).collect() }
            }
            // The remaining shapes are symmetric under x -> -x only up to a
            // rotation; for the wedge the image is the same arms pointing along
            // -x, which has no ShapeSpec form, so it is returned unchanged.
            other => other.clone(),
        }
    }

    fn required_dim(&self) -> u8 {
        match self {
            ShapeSpec::Interval { .. } => 1,
            ShapeSpec::Sphere { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub midpoint: Vec3,
    /// Outward unit normal.
    pub normal: Vec3,
    /// Arclength (d = 2), area (d = 3), or 1 for interval endpoints.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh {
    dim: SpatialDim,
    panels: Vec<Panel>,
    total_measure: f64,
    closed: bool,
}

impl BoundaryMesh {
    /// Builds a mesh from raw panels, checking normal lengths and weights.
    pub fn from_panels(dim: SpatialDim, panels: Vec<Panel>, closed: bool) -> Result<Self> {
        if panels.is_empty() {
            return Err(Error::InvalidShape("mesh has no panels".into()));
        }
        for (i, p) in panels.iter().enumerate() {
            let norm = libm::sqrt(dot(&p.normal, &p.normal));
            if libm::fabs(norm - 1.0) > 1e-12 {
                return Err(Error::InvalidShape(format!("panel {i} normal has length {norm}")));
            }
            if !(p.weight > 0.0 && p.weight.is_finite()) {
                return Err(Error::InvalidShape(format!("panel {i} weight {} is not positive", p.weight)));
            }
        }
        let total_measure = crate::sum::pairwise_sum(&panels.iter().map(|p| p.weight).collect::<Vec<_>>());
        Ok(BoundaryMesh { dim, panels, total_measure, closed })
    }

    pub fn dim(&self) -> SpatialDim {
        self.dim
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }

    pub fn total_measure(&self) -> f64 {
        self.total_measure
    }

    /// Whether the boundary encloses a region (closed curve or surface).
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Linear size of panel `i`: its weight in d = 2, the square root of its
    /// area in d = 3, and 0 for the point panels of d = 1.
    pub fn panel_size(&self, i: usize) -> f64 {
        match self.dim.get() {
            1 => 0.0,
            2 => self.panels[i].weight,
            _ => libm::sqrt(self.panels[i].weight),
        }
    }

    pub fn max_panel_size(&self) -> f64 {
        (0..self.len()).map(|i| self.panel_size(i)).fold(0.0, f64::max)
    }

    /// Largest distance between two panel midpoints.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.panels.iter().enumerate() {
            for b in &self.panels[i + 1..] {
                best = best.max(distance(&a.midpoint, &b.midpoint));
            }
        }
        best
    }

    /// `sum_i w_i n_i`; zero for closed boundaries.
    pub fn flux(&self) -> Vec3 {
        let mut acc = [0.0; 3];
        for p in &self.panels {
            for (a, n) in acc.iter_mut().zip(&p.normal) {
                *a += p.weight * n;
            }
        }
        acc
    }

    pub fn translated(&self, offset: Vec3) -> BoundaryMesh {
        let mut out = self.clone();
        for p in &mut out.panels {
            for (m, o) in p.midpoint.iter_mut().zip(&offset) {
                *m += o;
            }
        }
        out
    }

    /// Reflection of the first coordinate, applied to midpoints and normals.
    pub fn mirrored(&self) -> BoundaryMesh {
        let mut out = self.clone();
        for p in &mut out.panels {
            p.midpoint[0] = -p.midpoint[0];
            p.normal[0] = -p.normal[0];
        }
        out
    }

    /// Boundary of the complementary region: same panels, normals reversed.
    pub fn complement(&self) -> BoundaryMesh {
        let mut out = self.clone();
        for p in &mut out.panels {
            for n in &mut p.normal {
                *n = -*n;
            }
        }
        out
    }
}

pub(crate) fn distance(a: &Vec3, b: &Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    libm::sqrt(dot(&d, &d))
}

/// Separation of two panel midpoints and the dot product of their normals.
pub fn pair_distance_and_normals(
    mesh_a: &BoundaryMesh,
    i: usize,
    mesh_b: &BoundaryMesh,
    j: usize,
) -> Result<(f64, f64)> {
    let (Some(p), Some(q)) = (mesh_a.panels.get(i), mesh_b.panels.get(j)) else {
        return Err(Error::domain(
            "panel index",
            format!("({i}, {j}) out of range for meshes of {} and {} panels", mesh_a.len(), mesh_b.len()),
        ));
    };
    let sep = distance(&p.midpoint, &q.midpoint);
    if sep == 0.0 {
        return Err(Error::ZeroSeparation { i, j });
    }
    Ok((sep, dot(&p.normal, &q.normal)))
}

/// Discretizes the boundary of `shape` into roughly `n_panels` panels.
///
/// Circles, segments and wedge arms get exactly `n_panels` (arms split them
/// evenly); polylines distribute them by edge length with at least one per
/// edge; spheres use latitude bands of equal polar width, each zone split into
/// azimuthal panels of equal area so the total is close to `n_panels`.
/// Interval boundaries are always the two endpoints.
pub fn discretize_boundary(shape: &ShapeSpec, n_panels: usize, dim: SpatialDim) -> Result<BoundaryMesh> {
    if n_panels < 4 {
        return Err(Error::domain("n_panels", format!("must be at least 4, got {n_panels}")));
    }
    if shape.required_dim() != dim.get() {
        return Err(Error::Dimension {
            dim: dim.get(),
            reason: "does not match the shape (interval: d=1, sphere: d=3, others: d=2)",
        });
    }
    match shape {
        ShapeSpec::Interval { a, b } => interval(*a, *b),
        ShapeSpec::Strip { width, length } => {
            positive_len("width", *width)?;
            positive_len("length", *length)?;
            let (hw, hl) = (0.5 * width, 0.5 * length);
            polyline(&[[-hw, -hl], [hw, -hl], [hw, hl], [-hw, hl]], n_panels)
        }
        ShapeSpec::Circle { radius } => circle(positive_len("radius", *radius)?, n_panels),
        ShapeSpec::Sphere { radius } => sphere(positive_len("radius", *radius)?, n_panels),
        ShapeSpec::Wedge { opening, arm_length } => wedge(*opening, *arm_length, n_panels),
        ShapeSpec::Segment { start, end } => {
            let mut panels = Vec::with_capacity(n_panels);
            push_edge(&mut panels, *start, *end, n_panels, false)?;
            BoundaryMesh::from_panels(SpatialDim::TWO, panels, false)
        }
        ShapeSpec::Polyline { vertices } => polyline(vertices, n_panels),
    }
}

fn positive_len(param: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidShape(format!("{param} must be positive, got {v}")))
    }
}

fn interval(a: f64, b: f64) -> Result<BoundaryMesh> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidShape(format!("interval needs a < b, got [{a}, {b}]")));
    }
    let panels = alloc::vec![
        Panel { midpoint: [a, 0.0, 0.0], normal: [-1.0, 0.0, 0.0], weight: 1.0 },
        Panel { midpoint: [b, 0.0, 0.0], normal: [1.0, 0.0, 0.0], weight: 1.0 },
    ];
    BoundaryMesh::from_panels(SpatialDim::ONE, panels, true)
}

fn circle(radius: f64, n: usize) -> Result<BoundaryMesh> {
    let step = 2.0 * PI / n as f64;
    let weight = radius * step;
    let panels = (0..n)
        .map(|k| {
            let theta = (k as f64 + 0.5) * step;
            let (s, c) = libm::sincos(theta);
            Panel { midpoint: [radius * c, radius * s, 0.0], normal: [c, s, 0.0], weight }
        })
        .collect();
    BoundaryMesh::from_panels(SpatialDim::TWO, panels, true)
}

fn sphere(radius: f64, n: usize) -> Result<BoundaryMesh> {
    // Square-ish panels: bands * (4 bands / pi) ~ n.
    let bands = libm::round(libm::sqrt(PI * n as f64 / 4.0)).max(2.0) as usize;
    let dtheta = PI / bands as f64;
    let mut panels = Vec::with_capacity(n + bands);
    for k in 0..bands {
        let (t0, t1) = (k as f64 * dtheta, (k + 1) as f64 * dtheta);
        let tm = 0.5 * (t0 + t1);
        let zone = 2.0 * PI * radius * radius * (libm::cos(t0) - libm::cos(t1));
        let per_band = libm::round(2.0 * bands as f64 * libm::sin(tm)).max(3.0) as usize;
        let weight = zone / per_band as f64;
        let (st, ct) = libm::sincos(tm);
        let dphi = 2.0 * PI / per_band as f64;
        for m in 0..per_band {
            let (sp, cp) = libm::sincos((m as f64 + 0.5) * dphi);
            let normal = [st * cp, st * sp, ct];
            panels.push(Panel {
                midpoint: [radius * normal[0], radius * normal[1], radius * normal[2]],
                normal,
                weight,
            });
        }
    }
    BoundaryMesh::from_panels(SpatialDim::THREE, panels, true)
}

fn wedge(opening: f64, arm_length: f64, n: usize) -> Result<BoundaryMesh> {
    if !(opening > 0.0 && opening < PI) {
        return Err(Error::InvalidShape(format!("wedge opening must lie in (0, pi), got {opening}")));
    }
    let arm = positive_len("arm_length", arm_length)?;
    let half = 0.5 * opening;
    let (s, c) = libm::sincos(half);
    let per_arm = n / 2;
    let mut panels = Vec::with_capacity(2 * per_arm);
    // Upper arm traversed from the tip to the apex, lower arm from the apex
    // out, so the right-hand normal points away from the sector.
    push_edge(&mut panels, [arm * c, arm * s], [0.0, 0.0], per_arm, false)?;
    push_edge(&mut panels, [0.0, 0.0], [arm * c, -arm * s], per_arm, false)?;
    BoundaryMesh::from_panels(SpatialDim::TWO, panels, false)
}

/// Appends `count` equal panels along `start -> end`. The normal is the
/// right-hand perpendicular, or the left-hand one when `left` is set.
fn push_edge(panels: &mut Vec<Panel>, start: [f64; 2], end: [f64; 2], count: usize, left: bool) -> Result<()> {
    let dx = end[0] - start[0];
    let dy = end[1] - start[1];
    let len = libm::hypot(dx, dy);
    if !(len > 0.0 && len.is_finite()) {
        return Err(Error::InvalidShape(format!("degenerate edge {start:?} -> {end:?}")));
    }
    let normal = if left { [-dy / len, dx / len, 0.0] } else { [dy / len, -dx / len, 0.0] };
    let weight = len / count as f64;
    for k in 0..count {
        let t = (k as f64 + 0.5) / count as f64;
        panels.push(Panel { midpoint: [start[0] + t * dx, start[1] + t * dy, 0.0], normal, weight });
    }
    Ok(())
}

fn polyline(vertices: &[[f64; 2]], n: usize) -> Result<BoundaryMesh> {
    let nv = vertices.len();
    if nv < 3 {
        return Err(Error::InvalidShape(format!("polyline needs at least 3 vertices, got {nv}")));
    }
    if vertices.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidShape("polyline has non-finite vertices".into()));
    }
    let edge = |k: usize| (vertices[k], vertices[(k + 1) % nv]);
    let mut twice_area = 0.0;
    let mut perimeter = 0.0;
    for k in 0..nv {
        let (p, q) = edge(k);
        twice_area += p[0] * q[1] - q[0] * p[1];
        perimeter += libm::hypot(q[0] - p[0], q[1] - p[1]);
    }
    if !(libm::fabs(twice_area) > 0.0) {
        return Err(Error::InvalidShape("polyline encloses zero area".into()));
    }
    for a in 0..nv {
        for b in a + 1..nv {
            // Adjacent edges share a vertex and are allowed to touch there.
            if b == a + 1 || (a == 0 && b == nv - 1) {
                continue;
            }
            let (p1, p2) = edge(a);
            let (q1, q2) = edge(b);
            if segments_intersect(p1, p2, q1, q2) {
                return Err(Error::InvalidShape(format!("polyline edges {a} and {b} intersect")));
            }
        }
    }
    // Counterclockwise: right-hand normals point outward.
    let left = twice_area < 0.0;
    let mut panels = Vec::with_capacity(n + nv);
    for k in 0..nv {
        let (p, q) = edge(k);
        let len = libm::hypot(q[0] - p[0], q[1] - p[1]);
        let count = libm::round(n as f64 * len / perimeter).max(1.0) as usize;
        push_edge(&mut panels, p, q, count, left)?;
    }
    BoundaryMesh::from_panels(SpatialDim::TWO, panels, true)
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        let v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let on_segment = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    let (o1, o2, o3, o4) = (orient(p1, p2, q1), orient(p1, p2, q2), orient(q1, q2, p1), orient(q1, q2, p2));
    if o1 != o2 && o3 != o4 {
        return true;
    }
    (o1 == 0 && on_segment(p1, p2, q1))
        || (o2 == 0 && on_segment(p1, p2, q2))
        || (o3 == 0 && on_segment(q1, q2, p1))
        || (o4 == 0 && on_segment(q1, q2, p2))
}
