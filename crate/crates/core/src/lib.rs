//! Improved discrete p-Hardy weights.
//!
//! For `p > 1` and finitely supported `φ` on `ℕ₀` with `φ(0) = 0`,
//!
//! ```text
//! Σ_{n>=1} |φ(n) - φ(n-1)|^p  >=  Σ_{n>=1} w_p(n) |φ(n)|^p,
//! w_p(n) = (1 - (1 - 1/n)^{(p-1)/p})^{p-1} - ((1 + 1/n)^{(p-1)/p} - 1)^{p-1},
//! ```
//!
//! and `w_p` strictly dominates the classical weight `((p-1)/p)^p n^{-p}`.
//! This crate evaluates `w_p` at arbitrary precision, expands it as an exact
//! power series in `1/n`, and checks each step of the domination argument on
//! finite grids.
//!
//! * [`numerics`]: exact rationals, fixed-precision reals, generalized binomials.
//! * [`weights`]: closed-form weights and comparison tables.
//! * [`laplacian`]: the combinatorial p-Laplacian and the ground-state transform.
//! * [`series`]: truncated power series and the exact weight expansion.
//! * [`proof_machinery`]: the `g`, `E_p`, `F_p` decomposition and its bounds as grid checks.
//! * [`verify`]: the inequality on random test functions and Rayleigh-quotient minimization.
//! * [`cli`]: the `phardy` command-line front end.

#![forbid(unsafe_code)]

pub mod cli;
pub mod error;
pub mod laplacian;
pub mod numerics;
pub mod proof_machinery;
pub mod series;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use numerics::{BigRational, ExponentPair, PrecReal, Scalar};
pub use weights::WeightKind;
