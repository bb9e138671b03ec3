//! The engines behind each subcommand, the parameter scan and the fit.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use entroscope_core::cft1d::{
    mutual_information_equal_intervals, single_interval_entropy, two_interval_entropy, CentralCharge, IntervalPair,
};
use entroscope_core::geometry::{discretize_boundary, BoundaryMesh, ShapeSpec, SpatialDim};
use entroscope_core::holographic::{
    adiabatic_mutual_information, area_coefficients, critical_separation_ratio, strip_entropy,
    two_strip_mutual_information, AdiabaticProfile, ProfileKind, StripConfig,
};
use entroscope_core::lattice::{lattice_block_entropy, lattice_mutual_information, RenyiIndex};
use entroscope_core::scaling::{fit_divergence, log_grid, DivergenceFit, EntropySeries, PREFACTOR_UNFIXED};
use entroscope_core::twist::{
    circle_entropy_reduced, sphere_entropy_reduced, wedge_log_coefficient, TwistKernelConfig,
};
use entroscope_core::Error as CoreError;
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::format_float;
use crate::parallel;
use crate::params::{Kind, ParamSpec, Params};

const HOLO_MODES: &[&str] = &["mi", "entropy", "parabolic", "corner"];
const TWIST_SHAPES: &[&str] = &["circle", "sphere", "circles", "segments", "wedge"];
pub const ENGINES: &[&str] = &["cft1d", "lattice", "holo", "twist"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Cft1d,
    Lattice,
    Holo,
    Twist,
}

/// One engine evaluation.
#[derive(Debug, Clone, Default)]
pub struct Eval {
    /// Value of the engine's natural parameter (the row label of a single run).
    pub param: f64,
    pub value: f64,
    /// Labels that do not depend on the scanned value.
    pub meta: Vec<(String, String)>,
    /// Per-point diagnostics; a scan reports their maximum.
    pub maxima: Vec<(&'static str, f64)>,
    pub warnings: Vec<String>,
}

fn meta(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Rewrites the parameter name in a core validation message to the CLI key.
fn renamed(e: CoreError, names: &[(&str, &str)]) -> CliError {
    let e = CliError::from(e);
    match e {
        CliError::Validation(msg) => {
            for (core, key) in names {
                if let Some(rest) = msg.strip_prefix(&format!("invalid {core}:")) {
                    return CliError::Validation(format!("invalid {key}:{rest}"));
                }
            }
            CliError::Validation(msg)
        }
        other => other,
    }
}

impl Engine {
    pub fn parse(name: &str) -> Option<Engine> {
        Some(match name {
            "cft1d" => Engine::Cft1d,
            "lattice" => Engine::Lattice,
            "holo" => Engine::Holo,
            "twist" => Engine::Twist,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Engine::Cft1d => "cft1d",
            Engine::Lattice => "lattice",
            Engine::Holo => "holo",
            Engine::Twist => "twist",
        }
    }

    pub fn specs(self) -> Vec<ParamSpec> {
        use Kind::*;
        let p = ParamSpec::new;
        match self {
            Engine::Cft1d => vec![
                p("mi", Flag, None, "mutual information of two equal intervals instead of a single-interval entropy"),
                p("L", Float, Some("1"), "interval length"),
                p("x", Float, Some("1"), "gap between the intervals"),
                p("epsilon", Float, Some("1e-3"), "UV cutoff"),
                p("c", Float, Some("1"), "central charge"),
                p("a1", Float, None, "general pair: left end of A"),
                p("b1", Float, None, "general pair: right end of A"),
                p("a2", Float, None, "general pair: left end of B"),
                p("b2", Float, None, "general pair: right end of B"),
            ],
            Engine::Lattice => vec![
                p("mi", Flag, None, "mutual information of two equal blocks instead of a block entropy"),
                p("L", Int, Some("64"), "block length in sites"),
                p("x", Int, Some("16"), "gap between the blocks in sites"),
                p("kf", Float, Some("1.5707963267948966"), "Fermi momentum (pi/2 is half filling)"),
                p("renyi", Float, Some("1"), "Renyi index, 1 for von Neumann"),
            ],
            Engine::Holo => vec![
                p(
                    "mode",
                    Choice(HOLO_MODES),
                    Some("mi"),
                    "two-strip mi, single-strip entropy, or an adiabatic profile",
                ),
                p("w", Float, Some("1"), "strip width"),
                p("length", Float, Some("100"), "strip length"),
                p("x", Float, Some("0.01"), "separation between the strips"),
                p("epsilon", Float, Some("1e-4"), "bulk cutoff"),
                p("prefactor", Float, Some("1"), "area-to-entropy factor 1/(4 G_N)"),
                p("x0", Float, Some("1e-3"), "profile: closest approach"),
                p("radius", Float, Some("1"), "parabolic profile: curvature radius"),
                p("slope", Float, Some("0.2"), "corner profile: opening slope"),
                p("w0", Float, Some("inf"), "profile: strip width"),
                p("ymin", Float, Some("-1"), "profile: lower end of the transverse range"),
                p("ymax", Float, Some("1"), "profile: upper end of the transverse range"),
            ],
            Engine::Twist => vec![
                p("shape", Choice(TWIST_SHAPES), Some("circle"), "region geometry"),
                p("R", Float, Some("1"), "circle or sphere radius"),
                p("epsilon", Float, Some("0.05"), "UV cutoff for self-integrals"),
                p("panels", Int, Some("0"), "mesh panels per boundary, 0 picks the coarsest allowed"),
                p("reduced", Flag, None, "circle/sphere: symmetry-reduced integral instead of a mesh"),
                p("x", Float, Some("0.5"), "circles/segments: gap between the boundaries"),
                p("length", Float, Some("1"), "segments: segment length"),
                p("theta", Float, Some("1.5707963267948966"), "wedge: corner angle"),
                p("arm", Float, Some("1"), "wedge: arm length"),
                p("norm_alpha", Float, Some("1"), "overall kernel normalization"),
                p("transverse", Flag, None, "include the transverse kernel term"),
            ],
        }
    }

    /// Keys the selected mode reads; scanning any other key is refused.
    pub fn active(self, p: &Params) -> Result<Vec<&'static str>, CliError> {
        Ok(match self {
            Engine::Cft1d if cft_pair(p)?.is_some() => vec!["a1", "b1", "a2", "b2", "epsilon", "c"],
            Engine::Cft1d if p.flag("mi")? => vec!["L", "x", "c"],
            Engine::Cft1d => vec!["L", "epsilon", "c"],
            Engine::Lattice if p.flag("mi")? => vec!["L", "x", "kf", "renyi"],
            Engine::Lattice => vec!["L", "kf", "renyi"],
            Engine::Holo => match p.text("mode")? {
                "mi" => vec!["w", "length", "x", "epsilon", "prefactor"],
                "entropy" => vec!["w", "length", "epsilon", "prefactor"],
                "parabolic" => vec!["x0", "radius", "w0", "ymin", "ymax", "prefactor"],
                _ => vec!["x0", "slope", "w0", "ymin", "ymax", "prefactor"],
            },
            Engine::Twist => match p.text("shape")? {
                "circle" | "sphere" if p.flag("reduced")? => vec!["R", "epsilon", "norm_alpha", "transverse"],
                "circle" | "sphere" => vec!["R", "epsilon", "panels", "norm_alpha", "transverse"],
                "circles" => vec!["R", "x", "panels", "norm_alpha", "transverse"],
                "segments" => vec!["length", "x", "panels", "norm_alpha", "transverse"],
                _ => vec!["theta", "arm"],
            },
        })
    }

    pub fn evaluate(self, p: &Params) -> Result<Eval, CliError> {
        let mut e = match self {
            Engine::Cft1d => cft1d(p)?,
            Engine::Lattice => lattice(p)?,
            Engine::Holo => holo(p)?,
            Engine::Twist => twist(p)?,
        };
        e.meta.push(("engine".into(), self.name().into()));
        e.meta.push(("units".into(), "nats".into()));
        Ok(e)
    }
}

fn cft_pair(p: &Params) -> Result<Option<[f64; 4]>, CliError> {
    let keys = ["a1", "b1", "a2", "b2"];
    let given = keys.iter().filter(|k| p.has(k)).count();
    if given == 0 {
        return Ok(None);
    }
    let mut out = [0.0; 4];
    for (slot, key) in out.iter_mut().zip(keys) {
        if !p.has(key) {
            return Err(CliError::invalid(key, "is required when any of a1, b1, a2, b2 is given"));
        }
        *slot = p.float(key)?;
    }
    Ok(Some(out))
}

fn cft1d(p: &Params) -> Result<Eval, CliError> {
    let c = CentralCharge::new(p.float("c")?)?;
    let conv = format!("S = (c/3) ln(L/epsilon), c = {}", p.raw("c")?);
    if let Some([a1, b1, a2, b2]) = cft_pair(p)? {
        let pair = IntervalPair::new(a1, b1, a2, b2, p.float("epsilon")?)?;
        let eps = pair.epsilon();
        let joint = two_interval_entropy(&pair, c);
        let (quantity, value) = if p.flag("mi")? {
            let s = single_interval_entropy(b1 - a1, eps, c)? + single_interval_entropy(b2 - a2, eps, c)?;
            ("mutual_information", s - joint)
        } else {
            ("entropy_union", joint)
        };
        return Ok(Eval {
            param: a2 - b1,
            value,
            meta: meta(&[("quantity", quantity.into()), ("prefactor", conv)]),
            ..Eval::default()
        });
    }
    let l = p.float("L")?;
    if p.flag("mi")? {
        let value = mutual_information_equal_intervals(l, p.float("x")?, c)?;
        Ok(Eval {
            param: p.float("x")?,
            value,
            meta: meta(&[("quantity", "mutual_information".into()), ("prefactor", conv)]),
            ..Eval::default()
        })
    } else {
        let value = single_interval_entropy(l, p.float("epsilon")?, c)?;
        Ok(Eval {
            param: l,
            value,
            meta: meta(&[("quantity", "entropy".into()), ("prefactor", conv)]),
            ..Eval::default()
        })
    }
}

fn lattice(p: &Params) -> Result<Eval, CliError> {
    let names = [("k_F", "kf")];
    let n = RenyiIndex::new(p.float("renyi")?)?;
    let (l, kf) = (p.int("L")?, p.float("kf")?);
    let conv = "free-fermion chain, exact; no free prefactor".to_string();
    if p.flag("mi")? {
        let x = p.int("x")?;
        let value = lattice_mutual_information(l, x, kf, n).map_err(|e| renamed(e, &names))?;
        Ok(Eval {
            param: x as f64,
            value,
            meta: meta(&[("quantity", "mutual_information".into()), ("prefactor", conv)]),
            ..Eval::default()
        })
    } else {
        let value = lattice_block_entropy(l, kf, n).map_err(|e| renamed(e, &names))?;
        Ok(Eval {
            param: l as f64,
            value,
            meta: meta(&[("quantity", "entropy".into()), ("prefactor", conv)]),
            ..Eval::default()
        })
    }
}

fn holo(p: &Params) -> Result<Eval, CliError> {
    let names = [("L", "length"), ("y_range", "ymin")];
    let prefactor = p.float("prefactor")?;
    let k = area_coefficients()?;
    let mut labels = meta(&[
        ("prefactor", format!("area times prefactor = 1/(4 G_N) = {}, AdS radius 1", p.raw("prefactor")?)),
        ("k1", format_float(k.k1)),
        ("k2", format_float(k.k2)),
        ("critical_ratio", format_float(critical_separation_ratio())),
    ]);
    let mode = p.text("mode")?;
    match mode {
        "mi" | "entropy" => {
            let (w, length, eps) = (p.float("w")?, p.float("length")?, p.float("epsilon")?);
            let (param, value) = if mode == "mi" {
                let x = p.float("x")?;
                let cfg = StripConfig::new(w, length, x, eps).and_then(|c| c.with_prefactor(prefactor));
                (x, cfg.and_then(|c| two_strip_mutual_information(&c)).map_err(|e| renamed(e, &names))?)
            } else {
                (w, strip_entropy(w, length, eps, prefactor).map_err(|e| renamed(e, &names))?)
            };
            let quantity = if mode == "mi" { "mutual_information" } else { "entropy" };
            labels.push(("quantity".into(), quantity.into()));
            Ok(Eval { param, value, meta: labels, ..Eval::default() })
        }
        _ => {
            let x0 = p.float("x0")?;
            let kind = if mode == "parabolic" {
                ProfileKind::Parabolic { x0, radius: p.float("radius")? }
            } else {
                ProfileKind::Corner { x0, slope: p.float("slope")? }
            };
            let est = AdiabaticProfile::new(kind, p.float("w0")?, (p.float("ymin")?, p.float("ymax")?))
                .and_then(|prof| adiabatic_mutual_information(&prof, prefactor))
                .map_err(|e| renamed(e, &names))?;
            labels.push(("quantity".into(), format!("mutual_information_{mode}_adiabatic")));
            let warnings = if est.slope_warning {
                vec!["profile slope exceeds the adiabatic limit; estimate is uncontrolled there".to_string()]
            } else {
                Vec::new()
            };
            Ok(Eval {
                param: x0,
                value: est.mutual_information,
                meta: labels,
                maxima: vec![("max_slope", est.max_slope)],
                warnings,
            })
        }
    }
}

const TWIST_NAMES: &[(&str, &str)] = &[("n_panels", "panels"), ("radius", "R"), ("arm_length", "arm")];

fn twist_config(dim: SpatialDim, p: &Params) -> Result<TwistKernelConfig, CliError> {
    Ok(TwistKernelConfig::new(dim)?
        .with_transverse_term(p.flag("transverse")?)
        .with_norm_alpha(p.float("norm_alpha")?)?)
}

/// Requested panel count, or `None` for automatic.
fn panel_request(p: &Params) -> Result<Option<usize>, CliError> {
    match p.int("panels")? {
        0 => Ok(None),
        n if n > 0 => Ok(Some(n as usize)),
        n => Err(CliError::invalid("panels", format!("must be non-negative, got {n}"))),
    }
}

fn mesh(shape: &ShapeSpec, n: usize, dim: SpatialDim) -> Result<BoundaryMesh, CliError> {
    discretize_boundary(shape, n, dim).map_err(|e| renamed(e, TWIST_NAMES))
}

/// Self-integral entropy, growing an automatic mesh until it resolves the cutoff.
fn meshed_entropy(
    shape: &ShapeSpec,
    guess: usize,
    request: Option<usize>,
    eps: f64,
    cfg: &TwistKernelConfig,
) -> Result<(f64, usize), CliError> {
    let mut n = request.unwrap_or(guess);
    for _ in 0..8 {
        let m = mesh(shape, n, cfg.dim())?;
        match parallel::self_entropy(&m, eps, cfg) {
            Err(CoreError::Resolution { required_panels, .. }) if request.is_none() => {
                n = (required_panels + required_panels / 10).max(n + n / 4);
            }
            other => return other.map(|v| (v, m.len())).map_err(|e| renamed(e, TWIST_NAMES)),
        }
    }
    Err(CliError::Numerical(format!("automatic mesh did not resolve epsilon={eps} (stopped at {n} panels)")))
}

fn twist(p: &Params) -> Result<Eval, CliError> {
    let alpha = p.raw("norm_alpha")?;
    let mut labels = meta(&[("prefactor", format!("norm_alpha = {alpha}; {PREFACTOR_UNFIXED}"))]);
    let shape = p.text("shape")?;
    let (param, value, panels) = match shape {
        "circle" | "sphere" => {
            let (r, eps) = (p.float("R")?, p.float("epsilon")?);
            let dim = if shape == "circle" { SpatialDim::TWO } else { SpatialDim::THREE };
            let cfg = twist_config(dim, p)?;
            labels.push(("quantity".into(), "entropy".into()));
            if p.flag("reduced")? {
                let reduced = if shape == "circle" {
                    circle_entropy_reduced(r, eps, &cfg)
                } else {
                    sphere_entropy_reduced(r, eps, &cfg)
                };
                (eps, reduced.map_err(|e| renamed(e, TWIST_NAMES))?, None)
            } else {
                let h = 0.24 * eps;
                let (spec, guess) = if shape == "circle" {
                    (ShapeSpec::Circle { radius: r }, (2.0 * PI * r / h).ceil())
                } else {
                    (ShapeSpec::Sphere { radius: r }, (4.0 * PI * r * r / (h * h)).ceil())
                };
                if !guess.is_finite() || guess > 1e9 {
                    return Err(CliError::invalid("epsilon", "too small for a mesh at this radius; use --reduced"));
                }
                let (v, n) = meshed_entropy(&spec, guess as usize, panel_request(p)?, eps, &cfg)?;
                (eps, v, Some(n))
            }
        }
        "circles" | "segments" => {
            let x = p.float("x")?;
            if !(x.is_finite() && x > 0.0) {
                return Err(CliError::invalid("x", format!("must be a positive finite number, got {x}")));
            }
            let cfg = twist_config(SpatialDim::TWO, p)?;
            let (a, b) = if shape == "circles" {
                let r = p.float("R")?;
                let n = panel_request(p)?.unwrap_or(((8.0 * PI * r / x).ceil() as usize).clamp(64, 20000));
                let a = mesh(&ShapeSpec::Circle { radius: r }, n, SpatialDim::TWO)?;
                let b = a.translated([2.0 * r + x, 0.0, 0.0]);
                (a, b)
            } else {
                let l = p.float("length")?;
                let n = panel_request(p)?.unwrap_or(((4.0 * l / x).ceil() as usize).clamp(64, 20000));
                let a = mesh(&ShapeSpec::Segment { start: [0.0, l], end: [0.0, 0.0] }, n, SpatialDim::TWO)?;
                let b = mesh(&ShapeSpec::Segment { start: [0.0, 0.0], end: [0.0, l] }, n, SpatialDim::TWO)?
                    .translated([x, 0.0, 0.0]);
                (a, b)
            };
            labels.push(("quantity".into(), "mutual_information".into()));
            let v = parallel::cross_mutual_information(&a, &b, &cfg).map_err(|e| renamed(e, TWIST_NAMES))?;
            (x, v, Some(a.len()))
        }
        _ => {
            let theta = p.float("theta")?;
            let cfg = TwistKernelConfig::new(SpatialDim::TWO)?;
            let v = wedge_log_coefficient(theta, p.float("arm")?, &cfg).map_err(|e| renamed(e, TWIST_NAMES))?;
            labels.push(("quantity".into(), "corner_log_coefficient_ratio".into()));
            (theta, v, None)
        }
    };
    let maxima = panels.map(|n| vec![("mesh_panels", n as f64)]).unwrap_or_default();
    Ok(Eval { param, value, meta: labels, maxima, warnings: Vec::new() })
}

/// Folds per-point diagnostics into series metadata.
fn attach(series: &mut EntropySeries, evals: &[Eval]) {
    if let Some(first) = evals.first() {
        for (k, v) in &first.meta {
            series.insert_meta(k.clone(), v.clone());
        }
    }
    let mut maxima: BTreeMap<&str, f64> = BTreeMap::new();
    let mut warnings = BTreeSet::new();
    for e in evals {
        for &(k, v) in &e.maxima {
            let slot = maxima.entry(k).or_insert(v);
            *slot = slot.max(v);
        }
        warnings.extend(e.warnings.iter().cloned());
    }
    for (k, v) in maxima {
        let v = if k == "mesh_panels" { format!("{v}") } else { format_float(v) };
        series.insert_meta(k, v);
    }
    if !warnings.is_empty() {
        series.insert_meta("warning", warnings.into_iter().collect::<Vec<_>>().join("; "));
    }
}

fn echo(series: &mut EntropySeries, p: &Params) {
    for (k, v) in p.echo() {
        series.insert_meta(k, v);
    }
}

/// A single engine run as a one-row series.
pub fn single(engine: Engine, p: &Params) -> Result<EntropySeries, CliError> {
    let e = engine.evaluate(p)?;
    let name = match (engine, p.flag("mi").unwrap_or(false)) {
        (Engine::Cft1d, _) if cft_pair(p)?.is_some() => "separation".to_string(),
        (Engine::Cft1d | Engine::Lattice, true) => "x".into(),
        (Engine::Cft1d | Engine::Lattice, false) => "L".into(),
        (Engine::Holo, _) => match p.text("mode")? {
            "mi" => "x".into(),
            "entropy" => "w".into(),
            _ => "x0".into(),
        },
        (Engine::Twist, _) => match p.text("shape")? {
            "circle" | "sphere" => "epsilon".into(),
            "wedge" => "theta".into(),
            _ => "x".into(),
        },
    };
    let mut series = EntropySeries::new(name, vec![(e.param, e.value)])?;
    attach(&mut series, std::slice::from_ref(&e));
    echo(&mut series, p);
    Ok(series)
}

pub fn scan_specs() -> Vec<ParamSpec> {
    use Kind::*;
    let p = ParamSpec::new;
    vec![
        p("engine", Choice(ENGINES), None, "engine to sweep"),
        p("param", Text, None, "parameter to sweep"),
        p("from", Float, None, "first grid value"),
        p("to", Float, None, "last grid value"),
        p("points", Int, Some("20"), "number of grid points"),
        p("log-grid", Flag, None, "logarithmic instead of linear spacing"),
        p("then-fit", Flag, None, "fit the divergence of the series"),
    ]
}

fn grid(p: &Params, integer: bool) -> Result<Vec<f64>, CliError> {
    let (from, to) = (p.float("from")?, p.float("to")?);
    let n = p.int("points")?;
    if n < 1 {
        return Err(CliError::invalid("points", format!("must be at least 1, got {n}")));
    }
    let n = n as usize;
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::invalid("from", "grid ends must be finite"));
    }
    if !(to > from) && n > 1 {
        return Err(CliError::invalid("to", format!("must exceed from ({from}), got {to}")));
    }
    let mut g = if n == 1 {
        vec![from]
    } else if p.flag("log-grid")? {
        if from <= 0.0 {
            return Err(CliError::invalid("from", format!("a log grid needs a positive start, got {from}")));
        }
        log_grid(from, to, n)?
    } else {
        (0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect()
    };
    if integer {
        g = g.into_iter().map(f64::round).collect();
        g.dedup();
    }
    Ok(g)
}

/// Evaluates `engine` over a grid of `param`, concurrently; rows keep grid order.
pub fn scan(engine: Engine, p: &Params) -> Result<(EntropySeries, Option<DivergenceFit>), CliError> {
    let key = p.text("param")?.to_string();
    let spec = engine
        .specs()
        .into_iter()
        .find(|s| s.key == key)
        .ok_or_else(|| CliError::invalid("param", format!("'{key}' is not a parameter of {}", engine.name())))?;
    if !spec.is_numeric() {
        return Err(CliError::invalid("param", format!("'{key}' is not numeric")));
    }
    if !engine.active(p)?.contains(&spec.key) {
        return Err(CliError::invalid("param", format!("'{key}' does not affect the selected {} mode", engine.name())));
    }
    let integer = spec.kind == Kind::Int;
    let values = grid(p, integer)?;
    let evals = values
        .par_iter()
        .map(|&v| {
            let mut q = p.clone();
            q.set(&key, if integer { format!("{}", v as i64) } else { format_float(v) });
            engine.evaluate(&q)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let points = values.iter().zip(&evals).map(|(&v, e)| (v, e.value)).collect();
    let mut series = EntropySeries::new(key, points)?;
    attach(&mut series, &evals);
    echo(&mut series, p);
    let fit = if p.flag("then-fit")? { Some(fit_divergence(&series)?) } else { None };
    Ok((series, fit))
}

pub fn fit_specs() -> Vec<ParamSpec> {
    vec![ParamSpec::new("input", Kind::Text, None, "series file (csv or json) to fit")]
}

/// Fits a series read from disk; the input metadata is carried over.
pub fn fit(p: &Params) -> Result<(EntropySeries, DivergenceFit), CliError> {
    let path = p.text("input")?;
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::invalid("input", format!("cannot read {path}: {e}")))?;
    let mut series = crate::output::parse_any(&text)?;
    let fit = fit_divergence(&series)?;
    echo(&mut series, p);
    Ok((series, fit))
}
