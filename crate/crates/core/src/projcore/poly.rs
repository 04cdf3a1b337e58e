use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::point::RatProjPoint;
use crate::error::{Error, Result};

/// Default cap on the total number of monomials in a composed map.
pub const DEFAULT_MONOMIAL_BUDGET: usize = 2_000_000;

/// Multivariate polynomial with big-integer coefficients, keyed by exponent
/// vector. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub(crate) nvars: usize,
    pub(crate) terms: BTreeMap<Vec<u32>, BigInt>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigInt) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// Build from (coefficient, exponent) pairs; like terms are merged.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (BigInt, Vec<u32>)>) -> Result<Self> {
        let mut p = Poly::zero(nvars);
        for (c, e) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn variable(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(e, BigInt::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &BigInt)> {
        self.terms.iter()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn is_homogeneous_of(&self, d: u32) -> bool {
        self.terms.keys().all(|e| e.iter().sum::<u32>() == d)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, k: &BigInt) -> Poly {
        if k.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut acc: HashMap<Vec<u32>, BigInt> =
            HashMap::with_capacity(self.terms.len() * other.terms.len() / 2 + 1);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let prod = c1 * c2;
                match acc.get_mut(&e) {
                    Some(v) => *v += prod,
                    None => {
                        acc.insert(e, prod);
                    }
                }
            }
        }
        Poly {
            nvars: self.nvars,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    /// Content: gcd of all coefficients (nonnegative).
    pub fn content(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    pub fn max_abs_coeff(&self) -> BigInt {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Evaluate with caller-supplied ring operations; powers of each input
    /// coordinate are cached.
    pub fn eval_with<T: Clone>(
        &self,
        x: &[T],
        one: &T,
        coeff: impl Fn(&BigInt) -> T,
        mul: impl Fn(&T, &T) -> T,
        add: impl Fn(&T, &T) -> T,
        zero: T,
    ) -> T {
        let maxdeg = self.degree().unwrap_or(0) as usize;
        let powers: Vec<Vec<T>> = x
            .iter()
            .map(|xi| {
                let mut v = Vec::with_capacity(maxdeg + 1);
                v.push(one.clone());
                for k in 1..=maxdeg {
                    let next = mul(&v[k - 1], xi);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = zero;
        for (e, c) in &self.terms {
            let mut t = coeff(c);
            for (j, &ej) in e.iter().enumerate() {
                if ej > 0 {
                    t = mul(&t, &powers[j][ej as usize]);
                }
            }
            acc = add(&acc, &t);
        }
        acc
    }

    pub fn eval_int(&self, x: &[BigInt]) -> BigInt {
        self.eval_with(
            x,
            &BigInt::one(),
            |c| c.clone(),
            |a, b| a * b,
            |a, b| a + b,
            BigInt::zero(),
        )
    }

    pub fn eval_rational(&self, x: &[BigRational]) -> BigRational {
        self.eval_with(
            x,
            &BigRational::one(),
            |c| BigRational::from_integer(c.clone()),
            |a, b| a * b,
            |a, b| a + b,
            BigRational::zero(),
        )
    }

    /// Partial derivative with respect to variable j.
    pub fn derivative(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[j] > 0 {
                let mut e2 = e.clone();
                e2[j] -= 1;
                out.add_term(e2, c * BigInt::from(e[j]));
            }
        }
        out
    }
}

/// A tuple of k+1 homogeneous polynomials of a common degree with content 1:
/// a polynomial lift of a rational self-map of projective space (or, with a
/// different number of source variables, of a map between projective spaces).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogeneousMap {
    nvars: usize,
    degree: u32,
    polys: Vec<Poly>,
}

impl HomogeneousMap {
    /// Validates homogeneity and content-normalizes the coefficients.
    pub fn new(degree: u32, polys: Vec<Poly>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidMap("no coordinate polynomials".into()));
        }
        let nvars = polys[0].nvars;
        if let Some(p) = polys.iter().find(|p| p.nvars != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                got: p.nvars,
            });
        }
        if polys.iter().all(Poly::is_zero) {
            return Err(Error::InvalidMap("all coordinate polynomials vanish".into()));
        }
        if let Some(i) = polys.iter().position(|p| !p.is_homogeneous_of(degree)) {
            return Err(Error::InvalidMap(format!(
                "coordinate {i} is not homogeneous of degree {degree}"
            )));
        }
        let mut m = HomogeneousMap {
            nvars,
            degree,
            polys,
        };
        m.normalize_content();
        Ok(m)
    }

    /// Convenience constructor from integer (coefficient, exponents) lists.
    pub fn from_i64_terms(degree: u32, polys: &[&[(i64, &[u32])]]) -> Result<Self> {
        let nvars = polys
            .iter()
            .flat_map(|p| p.iter().map(|(_, e)| e.len()))
            .next()
            .ok_or_else(|| Error::InvalidMap("empty".into()))?;
        let polys = polys
            .iter()
            .map(|p| Poly::from_terms(nvars, p.iter().map(|(c, e)| (BigInt::from(*c), e.to_vec()))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(degree, polys)
    }

    /// The identity map of projective space with `n` homogeneous coordinates.
    pub fn identity(n: usize) -> Self {
        HomogeneousMap {
            nvars: n,
            degree: 1,
            polys: (0..n).map(|j| Poly::variable(n, j)).collect(),
        }
    }

    /// Linear map x -> M x with rational entries; denominators are cleared.
    pub fn linear(matrix: &[Vec<BigRational>]) -> Result<Self> {
        let cols = matrix.first().map(|r| r.len()).unwrap_or(0);
        let lcm = matrix
            .iter()
            .flatten()
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
        let polys = matrix
            .iter()
            .map(|row| {
                if row.len() != cols {
                    return Err(Error::DimensionMismatch {
                        expected: cols,
                        got: row.len(),
                    });
                }
                Poly::from_terms(
                    cols,
                    row.iter().enumerate().map(|(j, q)| {
                        let mut e = vec![0; cols];
                        e[j] = 1;
                        (q.numer() * (&lcm / q.denom()), e)
                    }),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(1, polys)
    }

    fn normalize_content(&mut self) {
        let g = self
            .polys
            .iter()
            .fold(BigInt::zero(), |acc, p| acc.gcd(&p.content()));
        if !g.is_zero() && !g.is_one() {
            for p in self.polys.iter_mut() {
                for c in p.terms.values_mut() {
                    *c = &*c / &g;
                }
            }
        }
    }

    /// Number of source variables.
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Number of coordinate polynomials (k + 1 for a self-map).
    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn num_monomials(&self) -> usize {
        self.polys.iter().map(Poly::num_terms).sum()
    }

    pub fn max_terms_per_coordinate(&self) -> usize {
        self.polys.iter().map(Poly::num_terms).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> BigInt {
        self.polys
            .iter()
            .map(Poly::max_abs_coeff)
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn is_self_map(&self) -> bool {
        self.nvars == self.polys.len()
    }

    /// Apply the lift to integer coordinates without normalizing.
    pub fn apply_int(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self.polys.iter().map(|p| p.eval_int(x)).collect())
    }

    /// Evaluate the induced map at a projective point.
    pub fn evaluate(&self, x: &RatProjPoint) -> Result<RatProjPoint> {
        let v = self.apply_int(x.coords())?;
        RatProjPoint::from_integers(v).map_err(|_| Error::IndeterminateEvaluation { step: 0 })
    }

    /// True when every coordinate polynomial vanishes at `x`.
    pub fn vanishes_at(&self, x: &RatProjPoint) -> bool {
        self.polys.iter().all(|p| p.eval_int(x.coords()).is_zero())
    }

    /// Remove the largest monomial dividing every coordinate polynomial.
    /// Returns the stripped map and the removed exponent vector.
    pub fn strip_monomial_factor(&self) -> (HomogeneousMap, Vec<u32>) {
        let mut common: Option<Vec<u32>> = None;
        for e in self.polys.iter().flat_map(|p| p.terms.keys()) {
            common = Some(match common {
                None => e.clone(),
                Some(c) => c.iter().zip(e).map(|(a, b)| *a.min(b)).collect(),
            });
        }
        let common = common.unwrap_or_else(|| vec![0; self.nvars]);
        let removed: u32 = common.iter().sum();
        if removed == 0 {
            return (self.clone(), common);
        }
        let polys = self
            .polys
            .iter()
            .map(|p| Poly {
                nvars: p.nvars,
                terms: p
                    .terms
                    .iter()
                    .map(|(e, c)| (e.iter().zip(&common).map(|(a, b)| a - b).collect(), c.clone()))
                    .collect(),
            })
            .collect();
        (
            HomogeneousMap {
                nvars: self.nvars,
                degree: self.degree - removed,
                polys,
            },
            common,
        )
    }

    /// Multiply every coordinate by a common polynomial (used by tests and to
    /// describe maps "up to a common factor").
    pub fn times(&self, factor: &Poly) -> Result<Self> {
        let d = factor
            .degree()
            .ok_or_else(|| Error::InvalidMap("zero factor".into()))?;
        Self::new(
            self.degree + d,
            self.polys.iter().map(|p| p.mul(factor)).collect(),
        )
    }

    /// Content-normalized lift scaled by an integer (for tests of content
    /// normalization).
    pub fn scaled(&self, k: &BigInt) -> Result<Self> {
        Self::new(self.degree, self.polys.iter().map(|p| p.scale(k)).collect())
    }
}

/// Formal composition F∘G by substituting the coordinates of G into F.
/// No common factor is removed; the result has degree deg F · deg G.
pub fn compose(f: &HomogeneousMap, g: &HomogeneousMap) -> Result<HomogeneousMap> {
    compose_with_budget(f, g, DEFAULT_MONOMIAL_BUDGET)
}

pub fn compose_with_budget(
    f: &HomogeneousMap,
    g: &HomogeneousMap,
    budget: usize,
) -> Result<HomogeneousMap> {
    let out = substitute(f, g, budget)?;
    if out.iter().all(Poly::is_zero) {
        return Err(Error::InvalidMap("composition vanishes identically".into()));
    }
    HomogeneousMap::new(f.degree * g.degree, out)
}

/// Coordinatewise substitution of G into F, returning the raw polynomials
/// (which may all vanish).
pub fn substitute(f: &HomogeneousMap, g: &HomogeneousMap, budget: usize) -> Result<Vec<Poly>> {
    if f.nvars != g.polys.len() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars,
            got: g.polys.len(),
        });
    }
    let nv = g.nvars;
    let maxdeg = f.degree as usize;
    // powers[j][k] = G_j^k
    let mut powers: Vec<Vec<Poly>> = Vec::with_capacity(g.polys.len());
    for gj in &g.polys {
        let mut v = vec![Poly::constant(nv, BigInt::one())];
        for k in 1..=maxdeg {
            let next = v[k - 1].mul(gj);
            if next.num_terms() > budget {
                return Err(Error::ResourceLimit(format!(
                    "intermediate power has {} monomials (budget {budget})",
                    next.num_terms()
                )));
            }
            v.push(next);
        }
        powers.push(v);
    }
    let mut out = Vec::with_capacity(f.polys.len());
    let mut total = 0usize;
    for fi in &f.polys {
        let mut acc = Poly::zero(nv);
        for (e, c) in &fi.terms {
            let mut t = Poly::constant(nv, c.clone());
            for (j, &ej) in e.iter().enumerate() {
                if ej > 0 {
                    t = t.mul(&powers[j][ej as usize]);
                }
            }
            acc = acc.add(&t);
        }
        total += acc.num_terms();
        if total > budget {
            return Err(Error::ResourceLimit(format!(
                "composed map exceeds {budget} monomials"
            )));
        }
        out.push(acc);
    }
    Ok(out)
}
