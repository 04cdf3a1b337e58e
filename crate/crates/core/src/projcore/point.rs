use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of projective space over the rationals, stored as its canonical
/// representative: coprime integer coordinates whose first nonzero entry is
/// positive. Two points are equal exactly when their coordinates are.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatProjPoint {
    coords: Vec<BigInt>,
}

impl RatProjPoint {
    /// Canonical representative of the point with the given rational
    /// homogeneous coordinates.
    pub fn normalize(raw: &[BigRational]) -> Result<Self> {
        if raw.iter().all(Zero::is_zero) {
            return Err(Error::ZeroVector);
        }
        let lcm = raw
            .iter()
            .filter(|q| !q.is_zero())
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let ints: Vec<BigInt> = raw
            .iter()
            .map(|q| q.numer() * (&lcm / q.denom()))
            .collect();
        Self::from_integers(ints)
    }

    /// Canonical representative of an integer vector.
    pub fn from_integers(mut coords: Vec<BigInt>) -> Result<Self> {
        let g = coords.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        if g.is_zero() {
            return Err(Error::ZeroVector);
        }
        let leading_negative = coords
            .iter()
            .find(|c| !c.is_zero())
            .map(|c| c.is_negative())
            .unwrap_or(false);
        let g = if leading_negative { -g } else { g };
        if !g.is_one() {
            for c in coords.iter_mut() {
                *c = &*c / &g;
            }
        }
        Ok(RatProjPoint { coords })
    }

    pub fn from_i64(coords: &[i64]) -> Result<Self> {
        Self::from_integers(coords.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    /// Number of homogeneous coordinates (k + 1).
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn to_rationals(&self) -> Vec<BigRational> {
        self.coords
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect()
    }

    /// Largest absolute coordinate of the canonical representative.
    pub fn max_abs(&self) -> BigInt {
        self.coords
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Bit length of the largest coordinate.
    pub fn bits(&self) -> u64 {
        self.coords.iter().map(|c| c.bits()).max().unwrap_or(0)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        crate::numeric::scaled_f64(&self.coords)
    }

    /// Parse "1,2,3" or "1/2, -3, 0".
    pub fn parse(text: &str) -> Result<Self> {
        let raw = text
            .split(',')
            .map(|s| crate::mapfile::parse_rational(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::normalize(&raw)
    }
}

impl fmt::Display for RatProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ":")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl fmt::Debug for RatProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for RatProjPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatProjPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        let raw = v
            .iter()
            .map(|s| crate::mapfile::parse_rational(s))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        RatProjPoint::normalize(&raw).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn divides_by_gcd() {
        let p = RatProjPoint::normalize(&[q(2, 1), q(4, 1), q(6, 1)]).unwrap();
        assert_eq!(p, RatProjPoint::from_i64(&[1, 2, 3]).unwrap());
    }

    #[test]
    fn clears_denominators() {
        let p = RatProjPoint::normalize(&[q(1, 2), q(1, 3), q(0, 1)]).unwrap();
        assert_eq!(p.to_string(), "[3:2:0]");
    }

    #[test]
    fn sign_normalization() {
        let p = RatProjPoint::normalize(&[q(-1, 1), q(0, 1), q(0, 1)]).unwrap();
        assert_eq!(p.to_string(), "[1:0:0]");
        let p = RatProjPoint::from_i64(&[0, -2, 4]).unwrap();
        assert_eq!(p.to_string(), "[0:1:-2]");
    }

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(
            RatProjPoint::normalize(&[q(0, 1), q(0, 5)]),
            Err(Error::ZeroVector)
        );
    }

    #[test]
    fn parse_mixed() {
        let p = RatProjPoint::parse("1/2, -1/3, 0").unwrap();
        assert_eq!(p.to_string(), "[3:-2:0]");
    }

    proptest! {
        #[test]
        fn scaling_invariance(
            coords in proptest::collection::vec(-1000i64..1000, 3),
            num in 1i64..500, den in 1i64..500, neg in any::<bool>()
        ) {
            prop_assume!(coords.iter().any(|&c| c != 0));
            let base: Vec<BigRational> = coords.iter().map(|&c| q(c, 1)).collect();
            let lambda = if neg { q(-num, den) } else { q(num, den) };
            let scaled: Vec<BigRational> = base.iter().map(|c| c * &lambda).collect();
            let p = RatProjPoint::normalize(&base).unwrap();
            let p2 = RatProjPoint::normalize(&scaled).unwrap();
            prop_assert_eq!(&p, &p2);
            // idempotent
            let again = RatProjPoint::normalize(&p.to_rationals()).unwrap();
            prop_assert_eq!(p, again);
        }
    }
}
