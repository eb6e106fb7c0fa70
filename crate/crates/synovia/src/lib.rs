//! Two-level spectral Galerkin solver for 2D incompressible generalized
//! Newtonian flow whose power-law index depends on a transported
//! concentration, coupled to a convection-diffusion equation.
//!
//! The crate is organised around six pieces:
//!
//! * [`fields`] — domains, tensor-product quadrature, node-sampled
//!   scalar/vector/tensor fields and their differential/integral operators;
//! * [`constitutive`] — stress and flux models with concentration-dependent
//!   power-law index, plus numerical verifiers of their structural
//!   inequalities (growth, strict monotonicity, coercivity, flux bounds);
//! * [`varexp`] — variable-exponent Lebesgue machinery: modulars, Luxembourg
//!   norms, Holder/Young inequality checks, the parabolic metric and
//!   Holder/log-Holder modulus estimators;
//! * [`basis`] — divergence-free velocity bases and L2-orthonormal
//!   concentration bases with analytic derivatives and projections;
//! * [`solver`] — assembly and adaptive integration of the coupled Galerkin
//!   ODE systems, a mollified-stress variant, and per-run diagnostics
//!   (energy identities, max/min principles, monotonicity gaps,
//!   refinement studies);
//! * [`harness`] — configuration parsing, scenario presets, study drivers
//!   and CSV/VTK/summary writers behind the command-line interface.
//!
//! See the examples directory for one runnable program per capability.

pub mod basis;
pub mod constitutive;
pub mod error;
pub mod fields;
pub mod harness;
pub mod numeric;
pub mod presets;
pub mod solver;
pub mod varexp;

pub use error::{Error, Result};
