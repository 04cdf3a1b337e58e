//! Arithmetic modulo the Mersenne prime 2^61 − 1 and dense univariate
//! polynomials over that field.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

pub const P: u64 = (1 << 61) - 1;

#[inline]
pub fn add(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= P {
        s - P
    } else {
        s
    }
}

#[inline]
pub fn sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + P - b
    }
}

#[inline]
pub fn mul(a: u64, b: u64) -> u64 {
    let prod = (a as u128) * (b as u128);
    let lo = (prod as u64) & P;
    let hi = (prod >> 61) as u64;
    add(lo, hi)
}

pub fn pow(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul(r, a);
        }
        a = mul(a, a);
        e >>= 1;
    }
    r
}

pub fn inv(a: u64) -> u64 {
    debug_assert!(a != 0);
    pow(a, P - 2)
}

pub fn from_i64(v: i64) -> u64 {
    let r = v.rem_euclid(P as i64);
    r as u64
}

pub fn from_bigint(v: &BigInt) -> u64 {
    let r = v.mod_floor(&BigInt::from(P));
    r.to_u64().expect("reduced residue fits")
}

/// Dense polynomial, coefficient of s^i at index i, trimmed of leading zeros.
pub type UPoly = Vec<u64>;

pub fn trim(p: &mut UPoly) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

/// Degree of a trimmed polynomial; `None` for zero.
pub fn degree(p: &UPoly) -> Option<usize> {
    p.len().checked_sub(1)
}

/// Interpolate the unique polynomial of degree ≤ n through (i, values[i]),
/// i = 0..=n, via Newton divided differences.
pub fn interpolate_at_naturals(values: &[u64]) -> UPoly {
    let n = values.len();
    let mut coef = values.to_vec();
    for j in 1..n {
        let inv_j = inv(j as u64);
        for i in (j..n).rev() {
            coef[i] = mul(sub(coef[i], coef[i - 1]), inv_j);
        }
    }
    // expand Newton form Σ coef[i] Π_{m<i} (s − m)
    let mut out: UPoly = vec![0; n];
    let mut basis: UPoly = vec![1];
    for (i, &c) in coef.iter().enumerate() {
        for (k, &b) in basis.iter().enumerate() {
            out[k] = add(out[k], mul(c, b));
        }
        // basis *= (s − i)
        let mut next = vec![0; basis.len() + 1];
        let mi = from_i64(-(i as i64));
        for (k, &b) in basis.iter().enumerate() {
            next[k + 1] = add(next[k + 1], b);
            next[k] = add(next[k], mul(b, mi));
        }
        basis = next;
    }
    trim(&mut out);
    out
}

fn rem(a: &UPoly, b: &UPoly) -> UPoly {
    let mut r = a.clone();
    let db = b.len() - 1;
    let lead_inv = inv(b[db]);
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let q = mul(*r.last().unwrap(), lead_inv);
        for (i, &bi) in b.iter().enumerate() {
            r[shift + i] = sub(r[shift + i], mul(q, bi));
        }
        trim(&mut r);
    }
    r
}

pub fn gcd(a: &UPoly, b: &UPoly) -> UPoly {
    let (mut x, mut y) = (a.clone(), b.clone());
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(&x, &y);
        x = y;
        y = r;
    }
    x
}
