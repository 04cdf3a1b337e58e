//! Exact linear algebra over the rationals for small matrices.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type RatMatrix = Vec<Vec<BigRational>>;

/// Row-reduce a copy of `m` and return its rank.
pub fn rank(m: &[Vec<BigRational>]) -> usize {
    let mut a: RatMatrix = m.to_vec();
    let rows = a.len();
    let cols = a.first().map(|r| r.len()).unwrap_or(0);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, pivot);
        for i in (r + 1)..rows {
            if a[i][c].is_zero() {
                continue;
            }
            let factor = &a[i][c] / &a[r][c];
            for j in c..cols {
                let t = &factor * &a[r][j];
                a[i][j] -= t;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

pub fn determinant(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a: RatMatrix = m.to_vec();
    let mut det = BigRational::one();
    for c in 0..n {
        let Some(pivot) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != c {
            a.swap(c, pivot);
            det = -det;
        }
        det *= &a[c][c];
        for i in (c + 1)..n {
            if a[i][c].is_zero() {
                continue;
            }
            let factor = &a[i][c] / &a[c][c];
            for j in c..n {
                let t = &factor * &a[c][j];
                a[i][j] -= t;
            }
        }
    }
    det
}

/// Gauss-Jordan inverse; `SingularMatrix` when not invertible.
pub fn inverse(m: &[Vec<BigRational>]) -> Result<RatMatrix> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let mut a: RatMatrix = m.to_vec();
    let mut inv: RatMatrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    for c in 0..n {
        let pivot = (c..n)
            .find(|&i| !a[i][c].is_zero())
            .ok_or(Error::SingularMatrix)?;
        a.swap(c, pivot);
        inv.swap(c, pivot);
        let p = a[c][c].clone();
        for j in 0..n {
            a[c][j] = &a[c][j] / &p;
            inv[c][j] = &inv[c][j] / &p;
        }
        for i in 0..n {
            if i == c || a[i][c].is_zero() {
                continue;
            }
            let factor = a[i][c].clone();
            for j in 0..n {
                let t = &factor * &a[c][j];
                a[i][j] -= t;
                let t = &factor * &inv[c][j];
                inv[i][j] -= t;
            }
        }
    }
    Ok(inv)
}

pub fn mat_vec(m: &[Vec<BigRational>], v: &[BigRational]) -> Vec<BigRational> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}
