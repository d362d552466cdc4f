//! Higher-order Fréchet derivatives of matrix functions on Hermitian
//! operators, computed through multiple operator integrals, together with
//! the scalar calculus (divided differences, mollification) and Schatten
//! norm machinery they rest on, plus an experiment harness that probes the
//! derivative formulas, Taylor remainders, convergence bounds, and the
//! commutative counterexample numerically.
//!
//! Layout:
//! - [`scalar_fn`]: scalar functions with evaluable derivatives, confluent
//!   divided differences, mollification, uniform-continuity diagnostics.
//! - [`spectral`]: Hermitian operators, clustered eigendecomposition,
//!   matrix functions, Schatten p-norms.
//! - [`moi`]: the multiple operator integral engine.
//! - [`frechet`]: derivative maps, Taylor expansion, finite-difference
//!   oracles, differentiability reports.
//! - [`experiments`]: executable probes (rank-one identities, necessity,
//!   mollifier convergence, norm bounds, the commutative counterexample).
//! - [`cli`]: config-driven runner behind the `opint` binary.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod frechet;
pub mod moi;
pub mod scalar_fn;
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
