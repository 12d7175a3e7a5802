//! Numerical laboratory for multiplicities of commuting operator tuples.
//!
//! The crate builds finite-dimensional models of weighted shifts (Hardy,
//! Bergman, Dirichlet, weighted Bergman) and of multiplication operators on
//! polynomial quotients, tensors them into doubly commuting tuples, and
//! certifies the multiplicity of joint invariant subspaces of the form
//! `S = (Q_1 ⊗ … ⊗ Q_n)^⊥` against the sum of the wandering dimensions of
//! the factors.
//!
//! Layers, bottom-up:
//!
//! * [`linalg`]: tolerance-aware dense complex operators and subspaces.
//! * [`model`]: truncated weighted shifts, kernel vectors, quotient models.
//! * [`tensor`]: Kronecker tuples, the `X_i` projections, the `F_i` chain
//!   and the `E_i` wandering pieces, each with residual-based verifiers.
//! * [`multiplicity`]: Krylov closures, local coranks and the randomized
//!   upper bound that together certify a multiplicity.
//! * [`verifier`]: JSON scenarios and reports driving the whole pipeline.

pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod model;
pub mod multiplicity;
pub mod tensor;
pub mod verifier;

pub use error::{Error, Result};
pub use exec::Execution;
pub use linalg::{Matrix, Operator, Scalar, Subspace, Vector, DEFAULT_TOL};
