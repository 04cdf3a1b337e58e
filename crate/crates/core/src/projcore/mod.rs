//! Exact projective geometry over ℚ: points, homogeneous polynomial maps,
//! point orbits and degree-sequence diagnostics.

mod degree;
mod locus;
pub(crate) mod modp;
mod pair;
mod point;
mod poly;

pub use degree::{
    common_factor_degree, degree_sequence, degrees, DegreeOptions, DegreeStep, FactorDegree,
    LINE_PARAM_BOUND,
};
pub use locus::{LocusDescription, LocusKind};
pub use pair::{
    orbit, random_point, validate_pair, validate_pair_seeded, BirationalPair, Direction,
    ValidationReport, WITNESS_POINTS,
};
pub use point::RatProjPoint;
pub use poly::{compose, compose_with_budget, substitute, HomogeneousMap, Poly, DEFAULT_MONOMIAL_BUDGET};
