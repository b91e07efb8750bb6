//! Pseudospectral and vortex-blob solvers for the two-dimensional averaged
//! Euler (Euler-α) equations.
//!
//! The evolution solved by [`dynamics`] is
//!
//! ```text
//! ∂ω/∂t + (1 - α²Δ)⁻¹ J[ψ, (1 - α²Δ)ω] = F + D,    ω = Δψ
//! ```
//!
//! on the doubly periodic square, with `α = 0` recovering the Euler
//! equations. [`vortex`] integrates the equivalent Lagrangian system of
//! `K₀`-smoothed vortex blobs.

pub mod bessel;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod spectral;
pub mod timestepper;
pub mod vortex;

pub use error::{Error, Result};
