//! Gaussian-kernel graph Laplacians on flat domains with kinked boundaries.
//!
//! The crate evaluates the discrete operator `L_{n,t}`, its continuum limit
//! `L_t` and the closed-form small-bandwidth predictor at interior, boundary,
//! corner and cusp points, and checks the bandwidth conditions under which
//! the discrete operator concentrates around its limit.

// `!(a > b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod concentration;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod operators;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod sector_moments;
pub mod specfun;
pub mod summation;

pub use error::{Error, Result};
