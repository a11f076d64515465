//! Network structure learning from stationary nodal time series.
//!
//! Observations follow `Y_t = L⁻¹ X_t` for a sparse symmetric positive definite `L` and a
//! wide-sense stationary injection process `X_t`. The estimator fits `L` at a single
//! frequency by minimizing an ℓ1-penalized Whittle likelihood built from the averaged
//! periodogram of `Y_t` and the known injection spectrum.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod graphs;
pub mod matcore;
pub mod panel;
pub mod parallel;
pub mod procgen;
pub mod spectra;
pub mod theory;
pub mod whittle;

pub use error::{Error, ErrorClass, Result};
pub use matcore::{HermitianMatrix, SymmetricMatrix, C64};
pub use panel::TimeSeriesPanel;
pub use parallel::Execution;
