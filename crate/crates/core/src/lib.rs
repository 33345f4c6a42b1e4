//! Numerical laboratory for J-sums of finite chains of normed spaces.
//!
//! A chain `X_1 → X_2 → … → X_N` of ℓ_p coordinate spaces joined by
//! contractions carries the James-type norm
//! `‖x‖_J = 2^{-1/q} sup_S ρ(x, S)`. This crate evaluates it exactly,
//! implements the interval, stepping and block projections, the block
//! extraction procedure with its analysis/synthesis operators, the dense
//! subspace chain embedding, and a seeded property-checking engine for the
//! associated inequalities.

pub mod chain;
pub mod cli;
pub mod densechain;
pub mod error;
pub mod estimates;
pub mod extraction;
pub mod jnorm;
pub mod projections;
pub mod random;
pub mod space;
pub mod vector;

pub use chain::{build_chain, builtin_chain, BuiltinKind, Chain, ChainDescription, ValidationMode};
pub use error::{JsumError, Result};
pub use jnorm::{jnorm, jnorm_oracle, norming_functional, rho, sigma, DualFunctional, NormCertificate, SubsetS};
pub use space::{CoordinateSpace, Exponent};
pub use vector::{omega_seminorm, JVector, Tail};

/// Relative tolerance for norm-level comparisons.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance for algebraic identities (coordinatewise).
pub const ALG_TOL: f64 = 1e-12;
