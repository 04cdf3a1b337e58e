//! Arithmetic and complex dynamics of birational maps of projective space:
//! exact degree sequences, p-adic stability certificates, canonical heights,
//! Green potentials and measures, and periodic points.

pub mod error;
pub mod greenc;
pub mod heights;
pub mod henon;
pub mod linalg;
pub mod mapfile;
pub mod numeric;
pub mod padic;
pub mod periodic;
pub mod projcore;

pub use error::{Error, Result};
