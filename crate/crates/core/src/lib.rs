//! SL(2) cocycles over concrete base dynamics: Lyapunov exponents, conefield
//! certificates of uniform hyperbolicity, periodic Schrödinger band structure,
//! regularized Lyapunov functionals and the positivity search built on them.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod base;
pub mod cocycle;
pub mod error;
mod fast;
pub mod linalg;
pub mod numeric;
pub mod quadrature;
pub mod regularizer;
pub mod search;
pub mod spectral;
pub mod uh;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
