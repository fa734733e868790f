//! Exact-arithmetic toolkit for weighted simultaneous Diophantine
//! approximation: quasi-norm predicates, auxiliary weights, parameter
//! schedules, a finite-depth Cantor-box construction with certified checks,
//! and the piecewise-linear dimension bound.

pub mod cantor;
pub mod dimension;
pub mod error;
pub mod geometry;
pub mod numeric;
pub mod scalar;
pub mod schedule;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Exact rational scalar used throughout the exact-only parts of the crate.
pub type Rational = num_rational::BigRational;

/// Box with exact rational corners.
pub type QBox = numeric::AxisBox<Rational>;
/// Hyperplane with exact rational coefficients.
pub type QPlane = numeric::AffinePlane<Rational>;
/// Exact weight vector.
pub type Weights = weights::WeightVector<Rational>;
