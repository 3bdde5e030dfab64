//! Period matrices of elliptic curves, isogeny-induced identities among them,
//! modular polynomials and exact scans of rational curves in `Y(1)ⁿ`.
//!
//! Analytic code is generic over [`scalar::Real`]; the crate-root aliases
//! fix the usual choices.

// Pinned directly so the system GMP/MPFR libraries are linked.
use gmp_mpfr_sys as _;

pub mod artifacts;
pub mod complex;
pub mod context;
pub mod error;
pub mod exactpoly;
pub mod isogeny;
pub mod kernel;
pub mod matrix;
pub mod modular;
pub mod periods;
pub mod polyrel;
pub mod relations;
pub mod scanner;
pub mod scalar;

pub use context::PrecisionContext;
pub use error::{Error, Result};
pub use scalar::{Mp, Real};

/// Multiprecision complex value.
pub type MpComplex = num_complex::Complex<Mp>;
/// Double-precision complex value.
pub type Complex64 = num_complex::Complex<f64>;
