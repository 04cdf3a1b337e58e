//! Small numeric helpers shared by the exact and floating-point paths.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

/// Natural logarithm of |n| for a nonzero big integer, accurate to double
/// precision regardless of size.
pub fn ln_abs(n: &BigInt) -> f64 {
    assert!(!n.is_zero(), "ln_abs of zero");
    let bits = n.bits();
    if bits <= 1000 {
        return n.abs().to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top: BigInt = n.abs() >> shift;
    top.to_f64().unwrap().ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Convert a big-integer vector to doubles after dividing all entries by a
/// common power of two, so that the largest entry is of order one when the
/// entries would otherwise overflow. Projective direction is preserved.
pub fn scaled_f64(v: &[BigInt]) -> Vec<f64> {
    let bits = v.iter().map(|c| c.bits()).max().unwrap_or(0);
    if bits <= 1000 {
        return v.iter().map(|c| c.to_f64().unwrap()).collect();
    }
    let shift = bits - 64;
    v.iter()
        .map(|c| {
            let sign = if c.is_negative() { -1.0 } else { 1.0 };
            let top: BigInt = c.abs() >> shift;
            sign * top.to_f64().unwrap()
        })
        .collect()
}

/// Neumaier compensated summation; deterministic for a fixed input order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Least-squares slope of log|term| against n over the nonzero terms with
/// n >= 1, returned as a geometric ratio exp(slope). Zero series give 0.
pub fn fit_geometric_ratio(terms: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = terms
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, t)| t.abs() > 0.0 && t.is_finite())
        .map(|(n, t)| (n as f64, t.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxy / sxx).exp()
}

/// Format with `digits` significant digits, fixed notation for moderate
/// exponents and scientific otherwise.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..16).contains(&e) {
        let decimals = (digits as i32 - 1 - e).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.*e}", digits - 1, x)
    }
}

/// Round to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    fmt_sig(x, digits).parse().unwrap_or(x)
}

/// Serde helper emitting a float with 12 significant digits.
pub fn ser_sig12<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x, 12))
}
