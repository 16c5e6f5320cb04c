//! Upper bounds and expected-Euler-characteristic approximations for the
//! distribution of the maximum of a smooth stationary isotropic Gaussian
//! field, together with the random-matrix and Hermite machinery they need,
//! second-order error exponents, and a Monte Carlo validation harness.
//!
//! The field `X` on a parameter set `S ⊂ R^d` has covariance
//! `E X(s)X(t) = ρ(‖s − t‖²)`. [`bounds::pbar_density`] evaluates an upper
//! bound `p̄(x)` for the density of `M = max_S X`, and
//! [`bounds::pe_density`] the EPC density whose integral is the expected
//! Euler characteristic of the excursion set.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asympt;
pub mod bounds;
pub mod error;
pub mod geometry;
pub mod hermite;
pub mod mc;
pub mod model;
pub mod randmat;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
