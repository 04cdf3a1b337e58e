//! Fixed-precision p-adic approximations with exact-zero tracking.
//!
//! A nonzero value is p^val · unit with the unit known modulo p^rel, so the
//! value itself is known modulo p^(val+rel) (its absolute precision). Zero
//! is either exact or "≡ 0 mod p^prec".

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::valuation_int;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Padic {
    /// Zero modulo p^prec; `None` means exactly zero.
    Zero { prec: Option<i64> },
    Nonzero { val: i64, unit: BigInt, rel: u32 },
}

/// Arithmetic context: the prime and the relative precision cap.
#[derive(Clone, Debug)]
pub struct PadicContext {
    p: BigInt,
    prime: u64,
    rel_cap: u32,
}

impl PadicContext {
    pub fn new(prime: u64, rel_cap: u32) -> Self {
        PadicContext {
            p: BigInt::from(prime),
            prime,
            rel_cap: rel_cap.max(1),
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn rel_cap(&self) -> u32 {
        self.rel_cap
    }

    fn pow(&self, k: u32) -> BigInt {
        num_traits::pow(self.p.clone(), k as usize)
    }

    pub fn exact_zero(&self) -> Padic {
        Padic::Zero { prec: None }
    }

    pub fn from_integer(&self, n: &BigInt) -> Padic {
        self.from_rational(&BigRational::from_integer(n.clone()))
    }

    pub fn from_rational(&self, q: &BigRational) -> Padic {
        if q.is_zero() {
            return self.exact_zero();
        }
        let (vn, n) = strip(q.numer(), self.prime);
        let (vd, d) = strip(q.denom(), self.prime);
        let modulus = self.pow(self.rel_cap);
        let inv = mod_inverse(&d.mod_floor(&modulus), &modulus);
        let unit = (n.mod_floor(&modulus) * inv).mod_floor(&modulus);
        Padic::Nonzero {
            val: vn as i64 - vd as i64,
            unit,
            rel: self.rel_cap,
        }
    }

    fn nonzero(&self, val: i64, raw: BigInt, abs_prec: i64) -> Padic {
        // raw is p^val · raw, known modulo p^abs_prec
        if abs_prec <= val {
            return Padic::Zero { prec: Some(abs_prec) };
        }
        let room = (abs_prec - val) as u32;
        let modulus = self.pow(room);
        let r = raw.mod_floor(&modulus);
        if r.is_zero() {
            return Padic::Zero { prec: Some(abs_prec) };
        }
        let (k, u) = strip(&r, self.prime);
        let rel = (room - k as u32).min(self.rel_cap);
        Padic::Nonzero {
            val: val + k as i64,
            unit: u.mod_floor(&self.pow(rel)),
            rel,
        }
    }

    pub fn add(&self, a: &Padic, b: &Padic) -> Padic {
        match (a, b) {
            (Padic::Zero { prec: None }, x) | (x, Padic::Zero { prec: None }) => x.clone(),
            (Padic::Zero { prec: Some(pa) }, Padic::Zero { prec: Some(pb) }) => Padic::Zero {
                prec: Some(*pa.min(pb)),
            },
            (Padic::Zero { prec: Some(pz) }, x @ Padic::Nonzero { val, unit, rel })
            | (x @ Padic::Nonzero { val, unit, rel }, Padic::Zero { prec: Some(pz) }) => {
                if *pz >= val + *rel as i64 {
                    x.clone()
                } else {
                    self.nonzero(*val, unit.clone(), *pz)
                }
            }
            (
                Padic::Nonzero { val: va, unit: ua, rel: ra },
                Padic::Nonzero { val: vb, unit: ub, rel: rb },
            ) => {
                let prec = (va + *ra as i64).min(vb + *rb as i64);
                let v0 = *va.min(vb);
                let term = |v: i64, u: &BigInt| {
                    if v >= prec {
                        BigInt::zero()
                    } else {
                        u * self.pow((v - v0) as u32)
                    }
                };
                self.nonzero(v0, term(*va, ua) + term(*vb, ub), prec)
            }
        }
    }

    pub fn neg(&self, a: &Padic) -> Padic {
        match a {
            Padic::Zero { .. } => a.clone(),
            Padic::Nonzero { val, unit, rel } => {
                let m = self.pow(*rel);
                Padic::Nonzero {
                    val: *val,
                    unit: (&m - unit).mod_floor(&m),
                    rel: *rel,
                }
            }
        }
    }

    pub fn sub(&self, a: &Padic, b: &Padic) -> Padic {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Padic, b: &Padic) -> Padic {
        match (a, b) {
            (Padic::Zero { prec: None }, _) | (_, Padic::Zero { prec: None }) => self.exact_zero(),
            (Padic::Zero { prec: Some(pa) }, Padic::Zero { prec: Some(pb) }) => Padic::Zero {
                prec: Some(pa + pb),
            },
            (Padic::Zero { prec: Some(pz) }, Padic::Nonzero { val, .. })
            | (Padic::Nonzero { val, .. }, Padic::Zero { prec: Some(pz) }) => Padic::Zero {
                prec: Some(pz + val),
            },
            (
                Padic::Nonzero { val: va, unit: ua, rel: ra },
                Padic::Nonzero { val: vb, unit: ub, rel: rb },
            ) => {
                let rel = (*ra).min(*rb);
                Padic::Nonzero {
                    val: va + vb,
                    unit: (ua * ub).mod_floor(&self.pow(rel)),
                    rel,
                }
            }
        }
    }

    /// Multiply by p^(−m).
    pub fn shift(&self, a: &Padic, m: i64) -> Padic {
        match a {
            Padic::Zero { prec } => Padic::Zero {
                prec: prec.map(|q| q - m),
            },
            Padic::Nonzero { val, unit, rel } => Padic::Nonzero {
                val: val - m,
                unit: unit.clone(),
                rel: *rel,
            },
        }
    }
}

impl Padic {
    /// The valuation when it is determined: `Some(Some(v))` for a nonzero
    /// value, `Some(None)` for exact zero, `None` when the value is only
    /// known to be ≡ 0 modulo some power of p.
    pub fn valuation(&self) -> Option<Option<i64>> {
        match self {
            Padic::Zero { prec: None } => Some(None),
            Padic::Zero { prec: Some(_) } => None,
            Padic::Nonzero { val, .. } => Some(Some(*val)),
        }
    }

    /// Lower bound for the valuation (∞ for exact zero).
    pub fn valuation_lower_bound(&self) -> Option<i64> {
        match self {
            Padic::Zero { prec } => *prec,
            Padic::Nonzero { val, .. } => Some(*val),
        }
    }

    pub fn is_known_nonzero(&self) -> bool {
        matches!(self, Padic::Nonzero { .. })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Padic::Zero { prec: None })
    }
}

/// (v_p(n), n / p^v) for n ≠ 0.
fn strip(n: &BigInt, p: u64) -> (u64, BigInt) {
    let v = valuation_int(n, p).expect("nonzero");
    let q = n / num_traits::pow(BigInt::from(p), v as usize);
    (v, q)
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    if m.is_one() {
        return BigInt::zero();
    }
    let e = a.extended_gcd(m);
    debug_assert!(e.gcd.abs().is_one());
    e.x.mod_floor(m)
}
