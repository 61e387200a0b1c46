//! Numerical laboratory for the resonance cascade of a trapped boson gas
//! coupled to a coherent photon field.
//!
//! The crate is organized bottom-up:
//!
//! - [`trap`]: truncated radial eigenbasis of `-Δ + V` in the `ℓ = 0` sector,
//!   plus the spectral-genericity check on energy gaps.
//! - [`kernel`], [`spectral`]: radial Fourier transforms, spectral densities of
//!   the half-wave operator `|∇|`, and regularized Cauchy transforms with
//!   singularity subtraction.
//! - [`coeffs`]: Hartree, Lamb-shift and Fermi-Golden-Rule coefficients, the
//!   limit matrix `M_{k,k'}` and the `η`-regularized quadruple tensor.
//! - [`cascade`], [`ode`]: limit and prelimit modal dynamics, an embedded
//!   Dormand–Prince integrator and trajectory diagnostics.
//! - [`convergence`]: the weak-coupling `η`-sweep.

// guards are written as `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cascade;
pub mod coeffs;
pub mod convergence;
mod error;
pub mod kernel;
pub mod ode;
pub mod quadrature;
pub mod spectral;
pub mod state;
pub mod trap;
mod tridiag;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
