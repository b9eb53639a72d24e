//! Exact bi-parameter dyadic calculus on the unit square.
//!
//! Everything lives on one finite [`ProductGrid`]: functions are constant on
//! leaf cells, so integrals, averages, Haar coefficients and suprema over
//! dyadic rectangles are finite sums and maxima.

// NaN-rejecting `!(x <= y)` comparisons are deliberate throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bmo;
pub mod bounds;
pub mod error;
pub mod exponent;
pub mod extrapolation;
pub mod function;
pub mod grid;
pub mod haar;
pub mod io;
pub mod norms;
pub mod ops;
pub mod reference;
pub mod rng;
pub mod weights;

pub use error::{Error, Result};
pub use exponent::{Exponent, ExponentTuple};
pub use function::{GridFunction, LineFunction, Pyramid, RectStats};
pub use grid::{DyadicInterval, DyadicRectangle, Param, ProductGrid};
pub use haar::{haar_forward, haar_inverse, Basis1, HaarCoefficients};
