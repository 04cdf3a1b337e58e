use num_bigint::BigInt;
use num_traits::Pow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::locus::LocusDescription;
use super::point::RatProjPoint;
use super::poly::HomogeneousMap;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// A birational self-map of ℙ^k given by a lift of f and a lift of f⁻¹,
/// with the exponent s and the declared indeterminacy loci.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BirationalPair {
    pub forward: HomogeneousMap,
    pub backward: HomogeneousMap,
    pub s: usize,
    pub ind_forward: LocusDescription,
    pub ind_backward: LocusDescription,
}

impl BirationalPair {
    /// Structural checks only (self-maps of the same ℙ^k, 1 ≤ s ≤ k−1);
    /// the mathematical hypotheses are reported by [`validate_pair`].
    pub fn new(
        forward: HomogeneousMap,
        backward: HomogeneousMap,
        s: usize,
        ind_forward: LocusDescription,
        ind_backward: LocusDescription,
    ) -> Result<Self> {
        if !forward.is_self_map() || !backward.is_self_map() {
            return Err(Error::InvalidPair("maps must be self-maps".into()));
        }
        if forward.nvars() != backward.nvars() {
            return Err(Error::DimensionMismatch {
                expected: forward.nvars(),
                got: backward.nvars(),
            });
        }
        let k = forward.nvars() - 1;
        if s < 1 || s + 1 > k {
            return Err(Error::InvalidPair(format!("s = {s} outside [1, {}]", k.saturating_sub(1))));
        }
        for locus in [&ind_forward, &ind_backward] {
            if locus.generators()[0].len() != k + 1 {
                return Err(Error::DimensionMismatch {
                    expected: k + 1,
                    got: locus.generators()[0].len(),
                });
            }
        }
        Ok(BirationalPair {
            forward,
            backward,
            s,
            ind_forward,
            ind_backward,
        })
    }

    /// Dimension k of the projective space.
    pub fn k(&self) -> usize {
        self.forward.nvars() - 1
    }

    pub fn d(&self) -> u32 {
        self.forward.degree()
    }

    pub fn delta(&self) -> u32 {
        self.backward.degree()
    }

    pub fn map(&self, direction: Direction) -> &HomogeneousMap {
        match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        }
    }

    /// The pair for f⁻¹.
    pub fn inverse(&self) -> BirationalPair {
        BirationalPair {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
            s: self.k() - self.s,
            ind_forward: self.ind_backward.clone(),
            ind_backward: self.ind_forward.clone(),
        }
    }

    pub fn on_loci(&self, x: &RatProjPoint) -> bool {
        self.ind_forward.contains(x) || self.ind_backward.contains(x)
    }
}

/// Point-by-point orbit [x, f(x), ..., f^N(x)] with gcd clearing at every
/// step. Reports the first step whose evaluation is indeterminate.
pub fn orbit(f: &HomogeneousMap, x: &RatProjPoint, n: usize) -> Result<Vec<RatProjPoint>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(x.clone());
    for step in 0..n {
        let next = f
            .evaluate(&out[step])
            .map_err(|_| Error::IndeterminateEvaluation { step })?;
        out.push(next);
    }
    Ok(out)
}

/// Outcome of [`validate_pair`]; failures are carried in the fields.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub k: usize,
    pub s: usize,
    pub d: u32,
    pub delta: u32,
    /// d^s = δ^(k−s)
    pub degrees_consistent: bool,
    pub forward_vanishes_on_locus: bool,
    pub backward_vanishes_on_locus: bool,
    pub loci_vanish: bool,
    /// dim I_f = k−s−1 and dim I_{f⁻¹} = s−1
    pub dims_match: bool,
    /// Random points x with f⁻¹(f(x)) = x and f(f⁻¹(x)) = x.
    pub witness_points_checked: usize,
    pub witness_points_failed: usize,
    pub birational_witness: bool,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.degrees_consistent && self.loci_vanish && self.dims_match && self.birational_witness
    }
}

pub const WITNESS_POINTS: usize = 20;
const WITNESS_BOUND: i64 = 1000;

pub fn validate_pair(pair: &BirationalPair) -> ValidationReport {
    validate_pair_seeded(pair, 0)
}

pub fn validate_pair_seeded(pair: &BirationalPair, seed: u64) -> ValidationReport {
    let k = pair.k();
    let s = pair.s;
    let (d, delta) = (pair.d(), pair.delta());
    let degrees_consistent =
        BigInt::from(d).pow(s as u32) == BigInt::from(delta).pow((k - s) as u32);
    let fwd = pair.ind_forward.is_killed_by(&pair.forward).unwrap_or(false);
    let bwd = pair.ind_backward.is_killed_by(&pair.backward).unwrap_or(false);
    let dims_match = pair.ind_forward.declared_dimension() + s + 1 == k
        && pair.ind_backward.declared_dimension() + 1 == s;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut failed = 0;
    let mut attempts = 0;
    while checked < WITNESS_POINTS && attempts < 50 * WITNESS_POINTS {
        attempts += 1;
        let x = match random_point(&mut rng, k + 1, WITNESS_BOUND) {
            Some(x) => x,
            None => continue,
        };
        let Ok(fx) = pair.forward.evaluate(&x) else { continue };
        let Ok(gx) = pair.backward.evaluate(&x) else { continue };
        let (Ok(back), Ok(forth)) = (pair.backward.evaluate(&fx), pair.forward.evaluate(&gx)) else {
            // landing on the other locus counts as a failed witness only if
            // the declared loci do not explain it
            continue;
        };
        checked += 1;
        if back != x || forth != x {
            failed += 1;
        }
    }
    ValidationReport {
        k,
        s,
        d,
        delta,
        degrees_consistent,
        forward_vanishes_on_locus: fwd,
        backward_vanishes_on_locus: bwd,
        loci_vanish: fwd && bwd,
        dims_match,
        witness_points_checked: checked,
        witness_points_failed: failed,
        birational_witness: checked > 0 && failed == 0,
    }
}

/// Uniform integer point in [−bound, bound]^n; `None` for the zero vector.
pub fn random_point<R: Rng>(rng: &mut R, n: usize, bound: i64) -> Option<RatProjPoint> {
    let v: Vec<BigInt> = (0..n)
        .map(|_| BigInt::from(rng.random_range(-bound..=bound)))
        .collect();
    RatProjPoint::from_integers(v).ok()
}
