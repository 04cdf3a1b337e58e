//! p-adic valuations, valuation tracking along orbits, and the stability
//! certifier for quadratic Hénon maps composed with a linear map.

mod certify;
mod number;
mod orbit;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use certify::{
    certify_stability_henon_a, certify_sweep, zariski_density_check, Escape, GrowthStep,
    Hypothesis, ProofKind, StabilityCertificate, Verdict, ZariskiReport, DEFAULT_SANITY_N,
};
pub use number::{Padic, PadicContext};
pub use orbit::{orbit_valuations, orbit_valuations_with, OrbitOptions, ValuationOrbitRecord};

/// Deterministic Miller–Rabin; the first twelve prime bases are exact for
/// every n < 2^64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        r
    };
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &BASES {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

pub fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// v_p(n) for an integer; `None` for n = 0. Assumes p ≥ 2.
pub fn valuation_int(n: &BigInt, p: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1;
    }
}

/// v_p of a rational; `None` encodes +∞ (x = 0).
pub fn valuation_rat(x: &BigRational, p: u64) -> Option<i64> {
    let vn = valuation_int(x.numer(), p)?;
    let vd = valuation_int(x.denom(), p).expect("nonzero denominator");
    Some(vn as i64 - vd as i64)
}

/// The p-adic valuation of a rational number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicValuation {
    /// `None` is +∞.
    pub value: Option<i64>,
    pub prime: u64,
}

impl PadicValuation {
    pub fn is_infinite(&self) -> bool {
        self.value.is_none()
    }

    /// |x|_p = p^(−v) as a float (0 for +∞).
    pub fn abs(&self) -> f64 {
        match self.value {
            None => 0.0,
            Some(v) => (self.prime as f64).powi(-(v as i32)),
        }
    }
}

impl fmt::Display for PadicValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            None => write!(f, "+inf"),
            Some(v) => write!(f, "{v}"),
        }
    }
}

pub fn vp(x: &BigRational, p: u64) -> Result<PadicValuation> {
    check_prime(p)?;
    Ok(PadicValuation {
        value: valuation_rat(x, p),
        prime: p,
    })
}

/// Order on valuations with `None` as +∞.
pub(crate) fn val_lt(a: Option<i64>, b: Option<i64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
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
    fn valuation_examples() {
        assert_eq!(vp(&q(50, 1), 5).unwrap().value, Some(2));
        assert_eq!(vp(&q(1, 9), 3).unwrap().value, Some(-2));
        assert!(vp(&q(0, 1), 7).unwrap().is_infinite());
        assert_eq!(vp(&q(1, 1), 4), Err(Error::NotPrime(4)));
        assert!((vp(&q(1, 9), 3).unwrap().abs() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            small,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime((1 << 61) - 1));
        assert!(is_prime(18_446_744_073_709_551_557));
        // strong pseudoprime to bases 2..=37 except the last few
        assert!(!is_prime(3_825_123_056_546_413_051));
        assert!(!is_prime(u64::MAX));
        // Carmichael number
        assert!(!is_prime(561));
    }

    #[test]
    fn primality_matches_trial_division() {
        let trial = |n: u64| n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..5000u64 {
            assert_eq!(is_prime(n), trial(n), "{n}");
        }
    }

    fn nonzero_rational() -> impl Strategy<Value = BigRational> {
        (-1_000_000i64..1_000_000, 1i64..1_000_000)
            .prop_filter("nonzero", |(n, _)| *n != 0)
            .prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn multiplicative_and_ultrametric(
            a in nonzero_rational(),
            b in nonzero_rational(),
            pi in 0usize..4,
        ) {
            let p = [2u64, 3, 5, 7][pi];
            let va = valuation_rat(&a, p).unwrap();
            let vb = valuation_rat(&b, p).unwrap();
            prop_assert_eq!(valuation_rat(&(&a * &b), p), Some(va + vb));
            match valuation_rat(&(&a + &b), p) {
                None => {}
                Some(v) => prop_assert!(v >= va.min(vb)),
            }
        }
    }
}
