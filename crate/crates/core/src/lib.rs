//! Certified asymptotic rate upper bounds for B2 codes.
//!
//! Two families are covered:
//!
//! * q-ary B2 codes, bounded through a maximum-entropy program over
//!   difference distributions `D = X - Y` subject to Fourier nonnegativity.
//!   The program is solved on a finite angle grid through its Lagrangian
//!   dual, so every reported entropy carries multipliers that re-prove it
//!   ([`entropy`], [`qary`]).
//! * binary constant-weight B2 codes, bounded by the fixed point of a
//!   distance-distribution exponent against the constant-weight LP distance
//!   bound ([`cw`]).
//!
//! [`math`] holds the shared primitives and [`combinatorics`] exhaustive
//! ground truth on tiny codes.

pub mod combinatorics;
pub mod cw;
pub mod entropy;
mod error;
pub mod math;
pub mod qary;

pub use error::{Error, Result};
