//! Simulation toolkit for computing with noisy inputs.
//!
//! - [`boolfn`]: truth tables, certificate complexity, the gap parameter of symmetric functions.
//! - [`poly`]: multilinear polynomials, composition trees and amplification polynomials.
//! - [`robustness`]: type-1 / type-2 robustness checks, boosting and the type conversions.
//! - [`lp`]: exact simplex and LP-based degree searches.
//! - [`noisysim`]: noisy oracle sets, flipped/restricted views and the query ledger.
//! - [`qsearch`]: the robust search contract and a small statevector backend.
//! - [`recover`]: full-input recovery and the algorithms built on it.
//! - [`harness`]: seeded experiment runner, statistics and report emission.
//!
//! Coefficient-level code is generic over [`Scalar`]; use [`Rational`] when an
//! identity must hold exactly and `f64` on Monte Carlo paths.

pub mod boolfn;
pub mod error;
pub mod harness;
pub mod lp;
pub mod noisysim;
pub mod poly;
pub mod qsearch;
pub mod recover;
pub mod robustness;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;

pub type MultilinearPolyQ = poly::MultilinearPoly<Rational>;
pub type MultilinearPolyF64 = poly::MultilinearPoly<f64>;
pub type PolyExprQ = poly::PolyExpr<Rational>;
pub type PolyExprF64 = poly::PolyExpr<f64>;
