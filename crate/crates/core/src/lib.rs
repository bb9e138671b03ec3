//! Numerics for entanglement entropy and mutual information in scale-invariant
//! theories.
//!
//! Four independent routes are provided and are meant to check one another:
//!
//! - [`cft1d`]: exact 1+1D free-fermion CFT formulas,
//! - [`lattice`]: the correlation-matrix method on free-fermion chains,
//! - [`holographic`]: Ryu-Takayanagi strip surfaces in AdS4,
//! - [`twist`]: the Gaussian twist-operator ansatz as a boundary-element sum.
//!
//! [`scaling`] carries the scale integrals, the collision-exponent predictions
//! and a divergence classifier for computed series.
//!
//! The crate is `no_std` (with `alloc`). IO, the CLI and parallel drivers live
//! in the `entroscope` crate.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cft1d;
pub mod eigen;
mod error;
pub mod geometry;
pub mod holographic;
pub mod lattice;
pub mod lstsq;
pub mod quadrature;
pub mod scaling;
pub mod sum;
pub mod twist;

pub use error::{Error, Result};
