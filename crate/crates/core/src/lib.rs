//! Sigma-function calculus for quasi-Carleman Hankel operators.
//!
//! A Hankel operator with kernel `h(t)` acts on `L²(ℝ₊)` by
//! `(Hf)(t) = ∫ h(t+s) f(s) ds`. Writing `h` as the Laplace transform of a
//! distribution `σ` turns its quadratic form into `⟨σ, |Lf|²⟩`, which is what
//! every module here is built around:
//!
//! * [`special`] gamma, Laguerre polynomials and truncated Taylor jets,
//! * [`kernel`] kernel descriptions and the boundedness table,
//! * [`sigma`] the distributions `σ`, their pairings and sign-matrices,
//! * [`transform`] Laplace/Mellin machinery on logarithmic grids,
//! * [`form`] both sides of the main identity and structural checks,
//! * [`predict`] closed-form negative-spectrum counts,
//! * [`galerkin`] finite sections and variational certificates.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod form;
pub mod galerkin;
pub mod kernel;
pub mod predict;
pub mod quad;
pub mod sigma;
pub mod special;
pub mod transform;

pub use error::{Error, Result};
pub use form::TestFunction;
pub use galerkin::{Certificate, FiniteSection, Stabilized};
pub use kernel::{Classification, FiniteRankTerm, Kernel, QuasiCarlemanTerm, Term};
pub use num_complex::Complex64;
pub use predict::{NegCount, Prediction, Source};
pub use sigma::{Inertia, SigmaDistribution, SigmaPart, SignMatrix};
pub use special::{FunctionSpec, Jet};
pub use transform::{GridFunction, LogGrid};

/// Shorthand used throughout the crate.
pub type C64 = Complex64;
