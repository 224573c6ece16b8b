//! Orbit membership, covariants and explicit decompositions for `n x n x n`
//! tensors under the action of `GL(n) x GL(n) x GL(n)`.
//!
//! The central object is the orbit of the unit diagonal tensor `D`: the
//! tensors of rank `n` with full multilinear rank. The crate decides
//! membership (exactly over the rationals, or numerically over `Complex64`),
//! computes the covariants `h_i`, `f_i` and the tangles `tau_3`, `tau_4`,
//! classifies real tensors by signature, tests the three-leaf latent-class
//! model, and generates the standard rank-jumping families.

pub mod error;
pub mod families;
pub mod invariants;
pub mod latent;
pub mod matrix;
pub mod membership;
pub mod poly;
pub mod random;
pub mod real;
pub mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use poly::{MultiPoly, PolyMatrix};
pub use scalar::{Complex64, Field, GaussianRational, Rational, RealField};
pub use tensor::{AnyTensor, Axis, GroupElement, Tensor3};
