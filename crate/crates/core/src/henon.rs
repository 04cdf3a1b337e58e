//! Standard test families: quadratic Hénon maps of ℙ², their compositions
//! with projective linear maps, and the standard Cremona involution.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, RatMatrix};
use crate::projcore::{
    compose, BirationalPair, HomogeneousMap, LocusDescription, Poly, RatProjPoint,
};

fn term(c: BigInt, e: [u32; 3]) -> (BigInt, Vec<u32>) {
    (c, e.to_vec())
}

/// The Hénon pair f[x:y:t] = [x² + yt + a t² : b x t : t²] with inverse
/// f⁻¹[x:y:t] = [yt/b : xt − y²/b² − a t² : t²], over ℚ.
pub fn henon_pair(a: &BigRational, b: &BigRational) -> Result<BirationalPair> {
    if b.is_zero() {
        return Err(Error::DegenerateFamily("b = 0".into()));
    }
    // forward, scaled by lcm(den a, den b)
    let l = a.denom().lcm(b.denom());
    let ai = a.numer() * (&l / a.denom());
    let bi = b.numer() * (&l / b.denom());
    let forward = HomogeneousMap::new(
        2,
        vec![
            Poly::from_terms(
                3,
                [
                    term(l.clone(), [2, 0, 0]),
                    term(l.clone(), [0, 1, 1]),
                    term(ai, [0, 0, 2]),
                ],
            )?,
            Poly::from_terms(3, [term(bi, [1, 0, 1])])?,
            Poly::from_terms(3, [term(l.clone(), [0, 0, 2])])?,
        ],
    )?;
    // backward multiplied by b²: [b y t : b² x t − y² − a b² t² : b² t²]
    let b2 = b * b;
    let ab2 = a * &b2;
    let coeffs = [b.clone(), b2.clone(), -BigRational::one(), -ab2, b2];
    let l = coeffs.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let c: Vec<BigInt> = coeffs.iter().map(|q| q.numer() * (&l / q.denom())).collect();
    let backward = HomogeneousMap::new(
        2,
        vec![
            Poly::from_terms(3, [term(c[0].clone(), [0, 1, 1])])?,
            Poly::from_terms(
                3,
                [
                    term(c[1].clone(), [1, 0, 1]),
                    term(c[2].clone(), [0, 2, 0]),
                    term(c[3].clone(), [0, 0, 2]),
                ],
            )?,
            Poly::from_terms(3, [term(c[4].clone(), [0, 0, 2])])?,
        ],
    )?;
    BirationalPair::new(
        forward,
        backward,
        1,
        LocusDescription::points(vec![RatProjPoint::from_i64(&[0, 1, 0])?])?,
        LocusDescription::points(vec![RatProjPoint::from_i64(&[1, 0, 0])?])?,
    )
}

pub fn henon_pair_int(a: i64, b: i64) -> Result<BirationalPair> {
    henon_pair(&BigRational::from_integer(a.into()), &BigRational::from_integer(b.into()))
}

/// σ[x:y:z] = [yz : xz : xy].
pub fn cremona_involution() -> HomogeneousMap {
    HomogeneousMap::from_i64_terms(2, &[&[(1, &[0, 1, 1])], &[(1, &[1, 0, 1])], &[(1, &[1, 1, 0])]])
        .expect("static map")
}

/// The Cremona involution paired with itself; both loci are the three
/// coordinate points.
pub fn cremona_pair() -> BirationalPair {
    let pts = || {
        LocusDescription::points(vec![
            RatProjPoint::from_i64(&[1, 0, 0]).unwrap(),
            RatProjPoint::from_i64(&[0, 1, 0]).unwrap(),
            RatProjPoint::from_i64(&[0, 0, 1]).unwrap(),
        ])
        .unwrap()
    };
    BirationalPair::new(cremona_involution(), cremona_involution(), 1, pts(), pts())
        .expect("static pair")
}

fn image_of(matrix: &RatMatrix, p: &RatProjPoint) -> Result<RatProjPoint> {
    RatProjPoint::normalize(&linalg::mat_vec(matrix, &p.to_rationals()))
}

/// The pair for g = f∘A, where the caller supplies the matrix of A⁻¹ (rows
/// give the coordinates of A⁻¹[x:y:t]). Then g⁻¹ = A⁻¹∘f⁻¹,
/// I_g = A⁻¹(I_f) and I_{g⁻¹} = I_{f⁻¹}.
pub fn henon_after_linear(
    a: &BigRational,
    b: &BigRational,
    a_inverse: &RatMatrix,
) -> Result<BirationalPair> {
    let base = henon_pair(a, b)?;
    let a_matrix = linalg::inverse(a_inverse)?;
    let lin = HomogeneousMap::linear(&a_matrix)?;
    let lin_inv = HomogeneousMap::linear(a_inverse)?;
    let forward = compose(&base.forward, &lin)?;
    let backward = compose(&lin_inv, &base.backward)?;
    let i_f = image_of(a_inverse, &base.ind_forward.generators()[0])?;
    BirationalPair::new(
        forward,
        backward,
        1,
        LocusDescription::points(vec![i_f])?,
        base.ind_backward.clone(),
    )
}

/// The pair for g = A∘f with A given directly. Then g⁻¹ = f⁻¹∘A⁻¹,
/// I_g = I_f and I_{g⁻¹} = A(I_{f⁻¹}).
pub fn linear_after_henon(
    a: &BigRational,
    b: &BigRational,
    a_matrix: &RatMatrix,
) -> Result<BirationalPair> {
    let base = henon_pair(a, b)?;
    let a_inverse = linalg::inverse(a_matrix)?;
    let lin = HomogeneousMap::linear(a_matrix)?;
    let lin_inv = HomogeneousMap::linear(&a_inverse)?;
    let forward = compose(&lin, &base.forward)?;
    let backward = compose(&base.backward, &lin_inv)?;
    let i_finv = image_of(a_matrix, &base.ind_backward.generators()[0])?;
    BirationalPair::new(
        forward,
        backward,
        1,
        base.ind_forward.clone(),
        LocusDescription::points(vec![i_finv])?,
    )
}

/// Rational rotation in the plane of coordinates (i, j) with
/// cos = (m² − n²)/(m² + n²), sin = 2mn/(m² + n²).
pub fn rational_rotation(dim: usize, i: usize, j: usize, m: i64, n: i64) -> RatMatrix {
    let den = BigInt::from(m * m + n * n);
    let c = BigRational::new(BigInt::from(m * m - n * n), den.clone());
    let s = BigRational::new(BigInt::from(2 * m * n), den);
    let mut r: RatMatrix = (0..dim)
        .map(|a| {
            (0..dim)
                .map(|b| if a == b { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    r[i][i] = c.clone();
    r[j][j] = c;
    r[i][j] = -s.clone();
    r[j][i] = s;
    r
}
