use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::point::RatProjPoint;
use super::poly::{substitute, HomogeneousMap, DEFAULT_MONOMIAL_BUDGET};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocusKind {
    /// Finite list of points.
    Points,
    /// Projective linear subspace spanned by the generators.
    Linear,
}

/// A user-declared indeterminacy locus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocusDescription {
    kind: LocusKind,
    generators: Vec<RatProjPoint>,
    declared_dimension: usize,
}

impl LocusDescription {
    pub fn points(points: Vec<RatProjPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty point locus".into()));
        }
        Ok(LocusDescription {
            kind: LocusKind::Points,
            generators: points,
            declared_dimension: 0,
        })
    }

    pub fn linear(generators: Vec<RatProjPoint>, declared_dimension: usize) -> Result<Self> {
        if generators.len() != declared_dimension + 1 {
            return Err(Error::InvalidArgument(format!(
                "linear locus of dimension {declared_dimension} needs {} generators, got {}",
                declared_dimension + 1,
                generators.len()
            )));
        }
        let rows: Vec<Vec<BigRational>> = generators.iter().map(|g| g.to_rationals()).collect();
        if linalg::rank(&rows) != generators.len() {
            return Err(Error::InvalidArgument(
                "linear locus generators are projectively dependent".into(),
            ));
        }
        Ok(LocusDescription {
            kind: LocusKind::Linear,
            generators,
            declared_dimension,
        })
    }

    pub fn new(kind: LocusKind, generators: Vec<RatProjPoint>, dim: usize) -> Result<Self> {
        match kind {
            LocusKind::Points => {
                if dim != 0 {
                    return Err(Error::InvalidArgument(
                        "a point-list locus has dimension 0".into(),
                    ));
                }
                Self::points(generators)
            }
            LocusKind::Linear => Self::linear(generators, dim),
        }
    }

    pub fn kind(&self) -> LocusKind {
        self.kind
    }

    pub fn generators(&self) -> &[RatProjPoint] {
        &self.generators
    }

    pub fn declared_dimension(&self) -> usize {
        self.declared_dimension
    }

    /// Zero-dimensional loci as a point list (a linear locus of dimension 0
    /// is a single point).
    pub fn as_points(&self) -> Option<&[RatProjPoint]> {
        (self.declared_dimension == 0).then_some(&self.generators[..])
    }

    /// Whether `x` lies on the locus.
    pub fn contains(&self, x: &RatProjPoint) -> bool {
        match self.kind {
            LocusKind::Points => self.generators.contains(x),
            LocusKind::Linear => {
                let mut rows: Vec<Vec<BigRational>> =
                    self.generators.iter().map(|g| g.to_rationals()).collect();
                rows.push(x.to_rationals());
                linalg::rank(&rows) == self.generators.len()
            }
        }
    }

    /// Linear parametrization λ ↦ Σ λ_i g_i as a degree-one map.
    pub fn parametrization(&self) -> Result<HomogeneousMap> {
        let n = self.generators[0].len();
        let m = self.generators.len();
        let matrix: Vec<Vec<BigRational>> = (0..n)
            .map(|row| {
                (0..m)
                    .map(|col| BigRational::from_integer(self.generators[col].coords()[row].clone()))
                    .collect()
            })
            .collect();
        HomogeneousMap::linear(&matrix)
    }

    /// True when every coordinate of `f` vanishes identically on the locus:
    /// pointwise for point lists, symbolically on the parametrization for
    /// linear subspaces.
    pub fn is_killed_by(&self, f: &HomogeneousMap) -> Result<bool> {
        if self.generators[0].len() != f.nvars() {
            return Err(Error::DimensionMismatch {
                expected: f.nvars(),
                got: self.generators[0].len(),
            });
        }
        match self.kind {
            LocusKind::Points => Ok(self.generators.iter().all(|p| f.vanishes_at(p))),
            LocusKind::Linear => {
                let param = self.parametrization()?;
                let polys = substitute(f, &param, DEFAULT_MONOMIAL_BUDGET)?;
                Ok(polys.iter().all(|p| p.is_zero()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::henon;

    fn p(v: &[i64]) -> RatProjPoint {
        RatProjPoint::from_i64(v).unwrap()
    }

    #[test]
    fn linear_locus_requires_independent_generators() {
        assert!(LocusDescription::linear(vec![p(&[1, 0, 0, 0]), p(&[2, 0, 0, 0])], 1).is_err());
        assert!(LocusDescription::linear(vec![p(&[1, 0, 0, 0])], 1).is_err());
        let l = LocusDescription::linear(vec![p(&[1, 0, 0, 0]), p(&[0, 1, 0, 0])], 1).unwrap();
        assert!(l.contains(&p(&[3, -2, 0, 0])));
        assert!(!l.contains(&p(&[3, -2, 1, 0])));
    }

    #[test]
    fn point_locus_dimension_is_zero() {
        assert!(LocusDescription::new(LocusKind::Points, vec![p(&[0, 1, 0])], 1).is_err());
    }

    #[test]
    fn henon_loci_are_killed() {
        let pair = henon::henon_pair_int(1, 1).unwrap();
        assert!(pair.ind_forward.is_killed_by(&pair.forward).unwrap());
        assert!(pair.ind_backward.is_killed_by(&pair.backward).unwrap());
        assert!(!pair.ind_backward.is_killed_by(&pair.forward).unwrap());
    }

    #[test]
    fn symbolic_check_on_a_line() {
        // [x t : y t : z t : t^2] vanishes on the plane... only on t = 0 with
        // all of x t, y t, z t, t^2 zero, i.e. the hyperplane t = 0.
        let f = HomogeneousMap::from_i64_terms(
            2,
            &[
                &[(1, &[1, 0, 0, 1])],
                &[(1, &[0, 1, 0, 1])],
                &[(1, &[0, 0, 1, 1])],
                &[(1, &[0, 0, 0, 2])],
            ],
        )
        .unwrap();
        let line = LocusDescription::linear(vec![p(&[1, 0, 0, 0]), p(&[0, 1, 0, 0])], 1).unwrap();
        assert!(line.is_killed_by(&f).unwrap());
        let other = LocusDescription::linear(vec![p(&[1, 0, 0, 0]), p(&[0, 1, 0, 1])], 1).unwrap();
        assert!(!other.is_killed_by(&f).unwrap());
    }
}
