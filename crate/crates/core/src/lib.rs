//! One-dimensional quantum scattering on piecewise-constant potentials with
//! delta barriers.
//!
//! Three equivalent descriptions of the same physics are implemented side by
//! side and cross-checked against each other:
//!
//! * transfer matrices acting on endpoint plane-wave amplitudes
//!   (`(A₊e^{ikx}, A₋e^{-ikx})`),
//! * scattering matrices built from transmission and reflection amplitudes,
//! * the quantum wave impedance `Z(x) = (ħ/im) ψ'(x)/ψ(x)` and its 2×2
//!   fractional-linear ("impedance matrix") form.
//!
//! On top of that, [`periodic`] gives closed-form N-cell cascades through
//! Chebyshev polynomials of the second kind, and [`dirac_comb`] solves the
//! surface (Tamm) states of a finite Dirac comb between two confining leads.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dirac_comb;
pub mod error;
pub mod impedance;
pub mod matrices;
pub mod periodic;
pub mod potential;
pub mod roots;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Default tolerance for physics invariants (flux, unimodularity, cross-formalism agreement).
pub const PHYSICS_TOL: f64 = 1e-10;
/// Default tolerance for pure algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-13;
