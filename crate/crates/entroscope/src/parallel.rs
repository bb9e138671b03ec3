//! Thread pool setup and row-parallel twist integrals.
//!
//! Rows are computed concurrently and combined in index order, so results do
//! not depend on the number of workers.

use entroscope_core::geometry::BoundaryMesh;
use entroscope_core::twist::{CrossIntegral, SelfIntegral, TwistKernelConfig};
use entroscope_core::Result;
use rayon::prelude::*;

use crate::error::CliError;

pub const THREADS_VAR: &str = "ENTROSCOPE_THREADS";

/// Worker count from `ENTROSCOPE_THREADS`; unset, empty and 0 mean automatic.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(CliError::invalid(THREADS_VAR, e)),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| CliError::invalid(THREADS_VAR, format!("'{v}' is not a worker count"))),
    }
}

pub fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::invalid(THREADS_VAR, e))
}

pub fn self_entropy(mesh: &BoundaryMesh, epsilon: f64, cfg: &TwistKernelConfig) -> Result<f64> {
    let job = SelfIntegral::new(mesh, epsilon, cfg)?;
    let rows = (0..job.rows()).into_par_iter().map(|i| job.row(i)).collect::<Result<Vec<_>>>()?;
    job.combine(&rows)
}

pub fn cross_mutual_information(a: &BoundaryMesh, b: &BoundaryMesh, cfg: &TwistKernelConfig) -> Result<f64> {
    let job = CrossIntegral::new(a, b, cfg)?;
    let rows = (0..job.rows()).into_par_iter().map(|i| job.row(i)).collect::<Result<Vec<_>>>()?;
    job.combine(&rows)
}
