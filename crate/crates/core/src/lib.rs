//! Numerical core for adiabatic-evolution experiments with general
//! (non-self-adjoint, non-diagonalizable) time-dependent operators.
//!
//! The crate is organized around five layers:
//!
//! * [`mat`] — dense complex matrices: arithmetic, LU/QR factorizations,
//!   Hessenberg-QR eigenvalues, scaling-and-squaring exponential,
//!   rank-revealing null spaces and spectral norms.
//! * [`family`] — time-dependent operator families `t ↦ A(t)` on `[0,1]`
//!   and projection families `t ↦ P(t)`, including the standard
//!   similarity-built gallery `A(t) = R(t)⁻¹ A₀(t) R(t)` with `R(t) = e^{Ct}`.
//! * [`spectral`] — Riesz projections by contour quadrature, weakly
//!   associated projections by kernel/range splitting, spectral-gap
//!   diagnostics and resolvent ray bounds.
//! * [`evolution`] — adaptive commutator-free 4th-order exponential
//!   integration of `x' = G(t) x` for stiff generators `G = (1/ε)A + K`,
//!   plus a perturbation-series (Dyson) oracle.
//! * [`adiabatic`] — intertwining comparison evolutions, the reduced-resolvent
//!   commutator solver, the superadiabatic projection iteration, and
//!   transition-amplitude metrics.
//!
//! All computations are pure functions of their inputs; values are immutable
//! once constructed and safe to share across threads. The crate is `no_std`
//! compatible (with `alloc`); float transcendentals come from `libm` through
//! `num-traits` when the `std` feature is disabled.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adiabatic;
pub mod error;
pub mod evolution;
pub mod family;
pub mod mat;
pub mod spectral;

pub use error::Error;
pub use mat::{CMat, C64};
