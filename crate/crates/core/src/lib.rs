//! Norm-minimizing generalized inverses of full-rank fat matrices.
//!
//! For `A ∈ ℝ^{m×n}` with `m < n` the generalized inverses form the affine
//! set `𝒢(A) = {X : AX = I}`. This crate evaluates matrix norms, provides
//! proximal operators for them, and minimizes `‖X‖` or `‖XA‖` over `𝒢(A)`
//! with ADMM and linearized ADMM.

pub mod certificate;
pub mod constructions;
pub mod error;
pub mod linalg;
pub mod norms;
pub mod prox;
pub mod solvers;

pub use certificate::{certify_optimality, CertificateReport};
pub use constructions::{construct, Construction};
pub use error::{Error, Result};
pub use linalg::{mpp, AffineGinvSet, Matrix};
pub use norms::NormSpec;
pub use solvers::{admm_ginv, decoupled_column_solve, linearized_admm_pginv, SolveResult, SolverConfig, Target};
