//! Hyperasymptotic expansions of steepest-descent integrals
//!
//! ```text
//! T(z; α) = ω z^{1/ω} ∫ e^{-z(f(t) - f_n)} g(t) dt
//! ```
//!
//! taken along a steepest-descent path out of a saddle of order ω−1, for
//! polynomial `f` and `g`. The crate computes the Poincaré expansion
//! (Level 0) and its exponentially improved re-expansions (Levels 1–3)
//! written in terms of generalized hyperterminants, together with optimal
//! truncation schedules, rigorous remainder bounds, a quadrature oracle for
//! the integral itself, and the late-term solver that recovers Stokes
//! multipliers from the coefficients alone.
//!
//! Everything runs at a configurable decimal precision (see
//! [`arith::Precision`]) on top of MPFR/MPC.

pub mod arith;
pub mod bounds;
pub mod cli;
pub mod coeffs;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod hyperterm;
pub mod problem;
pub mod quad;
pub mod series;
pub mod specfun;

pub use arith::{phased_pow, PhasedComplex, Precision};
pub use error::{Error, Result};
