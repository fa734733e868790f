//! Geometry of numbers: lattices, successive minima, the coplanarity
//! certificate and intermediate approximation.

pub mod approx;
pub mod lattice;
pub mod simplex;

pub use approx::{check_conclusions, intermediate_approximation, intermediate_approximation_with_budget, Approximation};
pub use lattice::{minkowski_check, shear_lattice, successive_minima, LatticeBasis, MinimaReport, MinkowskiReport, ShearConvention, SymmetricBox};
pub use simplex::{fit_plane, scale_range, simplex_certificate, simplex_hypothesis, PlaneFit, SimplexCertificate};
