use alloc::string::String;

/// Errors raised by the numerical engines.
///
/// Every validation variant names the offending parameter so front ends can
/// report it verbatim.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {param}: {reason}")]
    Domain { param: &'static str, reason: String },
    #[error("invalid dim: d={dim} {reason}")]
    Dimension { dim: u8, reason: &'static str },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("zero separation between panel {i} and panel {j}; apply a cutoff")]
    ZeroSeparation { i: usize, j: usize },
    #[error("invalid n_panels: mesh under-resolved for epsilon={epsilon:e}, need at least {required_panels} panels")]
    Resolution { epsilon: f64, required_panels: usize },
    #[error("invalid separation: meshes are {min_separation:e} apart but panels are {panel_size:e} wide; refine the mesh or use an analytic path")]
    Proximity { min_separation: f64, panel_size: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain { param, reason: reason.into() }
    }

    /// True for failures of the numerics themselves, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Checks that `value` is finite and strictly positive.
pub(crate) fn positive(param: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(param, alloc::format!("must be a positive finite number, got {value}")))
    }
}
