//! Constant-coefficient differential operators between finite-dimensional
//! inner-product spaces, their principal symbols, and a small grid laboratory
//! for functions whose distributional derivative `B u` is a measure.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`] - multi-indices, symmetric index sets, and real/complex
//!   subspace algebra (images, kernels, intersections).
//! * [`operator`] - [`DiffOperator`], symbols, symbolic application to
//!   polynomials, polynomial null spaces, the first-order linearization and
//!   a catalog of standard operators.
//! * [`ellipticity`] - ellipticity constants, complex ellipticity decisions
//!   and the mixing condition.
//! * [`field`] - grid fields, finite-difference `B u`, jump synthesis and
//!   detection, densities, Riesz potentials and polynomial projections.

pub mod ellipticity;
pub mod error;
pub mod field;
pub mod operator;
pub mod sphere;
pub mod tensor;

pub use error::{Error, Result};
pub use operator::{DiffOperator, PolynomialField};
pub use tensor::{MultiIndex, SymIndexSet, Subspace};
