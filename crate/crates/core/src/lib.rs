//! 2-D time-domain acoustic waveform inversion toolkit: finite-difference
//! modeling, classical adjoint-state inversion, and a data-space
//! augmented-Lagrangian variant with exact and gradient-descent data updates.

// Input validation uses `!(x > 0.0)` so that NaN fails the check too;
// the positive-form comparison clippy suggests would accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataspace;
pub mod domain;
pub mod dri;
pub mod error;
pub mod fwi;
pub mod io;
pub mod linalg;
pub mod propagator;

pub use error::{Result, WdriError};
