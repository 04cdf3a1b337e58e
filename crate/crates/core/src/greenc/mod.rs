//! Complex-analytic numerics at the archimedean place: the lift potential
//! φ_f, Green-function partial sums, energy-condition series and the grid
//! approximation of the mixed measure μ_n in dimension 2.

mod energy;
mod grid;

use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapfile::{parse_rational, ComplexTerms, LocusSpec, MapSpec};
use crate::projcore::{BirationalPair, HomogeneousMap, LocusKind, RatProjPoint};

pub use energy::{
    energy_partial_sum, finite_evidence_stability, locus_distance, mc_pullback_average, EnergyMethod,
    EnergyOptions, EnergySeries, EnergySide, StabilityEvidence,
};
pub use grid::{fs_volume_density, mu_grid_k2, GridMeasure, GridOptions, NormKind, DEFAULT_MAX_CELLS};

/// ‖F(p)‖∞ below this (relative to ‖p‖∞^d) counts as an indeterminate value.
pub const NEAR_ZERO: f64 = 1e-14;

/// A point of ℙ^k(ℂ) with Euclidean-unit coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CProjPoint {
    coords: Vec<Complex64>,
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn sup_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

impl CProjPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        let n = norm2(&coords);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(CProjPoint {
            coords: coords.into_iter().map(|c| c / n).collect(),
        })
    }

    pub fn from_real(v: &[f64]) -> Result<Self> {
        Self::new(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn from_rat(x: &RatProjPoint) -> Self {
        Self::from_real(&x.to_f64()).expect("nonzero rational point")
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Affine coordinates (x_0/x_k, ..., x_{k−1}/x_k), if x_k ≠ 0.
    pub fn affine(&self) -> Option<Vec<Complex64>> {
        let last = *self.coords.last()?;
        if last.norm() < 1e-300 {
            return None;
        }
        Some(self.coords[..self.coords.len() - 1].iter().map(|c| c / last).collect())
    }
}

/// A homogeneous polynomial lift with complex double coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMap {
    nvars: usize,
    degree: u32,
    terms: Vec<Vec<(Complex64, Vec<u32>)>>,
}

impl ComplexMap {
    pub fn new(degree: u32, terms: ComplexTerms) -> Result<Self> {
        let nvars = terms.len();
        for t in terms.iter().flatten() {
            if t.1.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: t.1.len(),
                });
            }
            if t.1.iter().sum::<u32>() != degree {
                return Err(Error::InvalidMap("non-homogeneous complex lift".into()));
            }
        }
        Ok(ComplexMap { nvars, degree, terms })
    }

    pub fn from_exact(f: &HomogeneousMap) -> Self {
        let terms = f
            .polys()
            .iter()
            .map(|p| {
                p.terms()
                    .map(|(e, c)| (Complex64::new(c.to_f64().unwrap_or(f64::MAX), 0.0), e.clone()))
                    .collect()
            })
            .collect();
        ComplexMap {
            nvars: f.nvars(),
            degree: f.degree(),
            terms,
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_terms_per_coordinate(&self) -> usize {
        self.terms.iter().map(|t| t.len()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().flatten().map(|t| t.0.norm()).fold(0.0, f64::max)
    }

    /// (1/d)·log(M·c): upper bound for φ with sup norms.
    pub fn lift_bound_constant(&self) -> f64 {
        (self.max_terms_per_coordinate() as f64 * self.max_abs_coeff()).ln() / self.degree as f64
    }

    pub fn eval(&self, p: &[Complex64]) -> Vec<Complex64> {
        let d = self.degree as usize;
        let powers: Vec<Vec<Complex64>> = p
            .iter()
            .map(|&x| {
                let mut v = Vec::with_capacity(d + 1);
                v.push(Complex64::new(1.0, 0.0));
                for k in 1..=d {
                    v.push(v[k - 1] * x);
                }
                v
            })
            .collect();
        self.terms
            .iter()
            .map(|poly| {
                poly.iter().fold(Complex64::zero(), |acc, (c, e)| {
                    let mut t = *c;
                    for (j, &ej) in e.iter().enumerate() {
                        if ej > 0 {
                            t *= powers[j][ej as usize];
                        }
                    }
                    acc + t
                })
            })
            .collect()
    }

    /// (F(p), DF(p)·w).
    pub fn eval_jvp(&self, p: &[Complex64], w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let d = self.degree as usize;
        let powers: Vec<Vec<Complex64>> = p
            .iter()
            .map(|&x| {
                let mut v = vec![Complex64::new(1.0, 0.0); d + 1];
                for k in 1..=d {
                    v[k] = v[k - 1] * x;
                }
                v
            })
            .collect();
        let mut val = Vec::with_capacity(self.terms.len());
        let mut dir = Vec::with_capacity(self.terms.len());
        for poly in &self.terms {
            let (mut acc, mut dacc) = (Complex64::zero(), Complex64::zero());
            for (c, e) in poly {
                let mut t = *c;
                for (j, &ej) in e.iter().enumerate() {
                    t *= powers[j][ej as usize];
                }
                acc += t;
                for (j, &ej) in e.iter().enumerate() {
                    if ej == 0 || w[j] == Complex64::zero() {
                        continue;
                    }
                    let mut dt = *c * ej as f64 * powers[j][ej as usize - 1] * w[j];
                    for (i, &ei) in e.iter().enumerate() {
                        if i != j {
                            dt *= powers[i][ei as usize];
                        }
                    }
                    dacc += dt;
                }
            }
            val.push(acc);
            dir.push(dacc);
        }
        (val, dir)
    }

    /// f(x) as a unit point, or NearIndeterminate.
    pub fn apply(&self, x: &CProjPoint) -> Result<CProjPoint> {
        let q = self.eval(&x.coords);
        if sup_norm(&q) < NEAR_ZERO * sup_norm(&x.coords).powi(self.degree as i32) {
            return Err(Error::NearIndeterminate { step: 0 });
        }
        CProjPoint::new(q)
    }
}

/// A complex birational pair: lifts of f and f⁻¹ and the declared loci.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPair {
    pub forward: ComplexMap,
    pub backward: ComplexMap,
    pub s: usize,
    pub ind_forward: ComplexLocus,
    pub ind_backward: ComplexLocus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexLocus {
    pub kind: LocusKind,
    pub generators: Vec<CProjPoint>,
    pub dim: usize,
}

impl ComplexPair {
    pub fn from_exact(pair: &BirationalPair) -> Self {
        let locus = |l: &crate::projcore::LocusDescription| ComplexLocus {
            kind: l.kind(),
            generators: l.generators().iter().map(CProjPoint::from_rat).collect(),
            dim: l.declared_dimension(),
        };
        ComplexPair {
            forward: ComplexMap::from_exact(&pair.forward),
            backward: ComplexMap::from_exact(&pair.backward),
            s: pair.s,
            ind_forward: locus(&pair.ind_forward),
            ind_backward: locus(&pair.ind_backward),
        }
    }

    /// From a map file: the exact pair when all coefficients are real
    /// rationals, otherwise the complex double-precision lifts.
    pub fn from_spec(spec: &MapSpec) -> Result<Self> {
        if !spec.is_complex() {
            return Ok(Self::from_exact(&spec.to_pair()?));
        }
        let (f, g) = spec.to_complex()?;
        let forward = ComplexMap::new(spec.degree_forward, f)?;
        let backward = ComplexMap::new(spec.degree_backward, g)?;
        for m in [&forward, &backward] {
            if m.nvars != spec.k + 1 || m.terms.len() != spec.k + 1 {
                return Err(Error::InvalidMap(format!("a lift of ℙ^{} needs {} coordinates", spec.k, spec.k + 1)));
            }
        }
        let locus = |field: &str, l: &LocusSpec| -> Result<ComplexLocus> {
            let generators = l
                .generators
                .iter()
                .map(|g| {
                    let v = g
                        .iter()
                        .map(|c| parse_rational(c).map(|q| q.to_f64().unwrap_or(f64::NAN)))
                        .collect::<Result<Vec<f64>>>()?;
                    CProjPoint::from_real(&v)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::InvalidMap(format!("{field}: {e}")))?;
            if generators.iter().any(|g| g.len() != spec.k + 1) {
                return Err(Error::InvalidMap(format!("{field}: generators need {} coordinates", spec.k + 1)));
            }
            Ok(ComplexLocus {
                kind: l.kind,
                generators,
                dim: l.dim,
            })
        };
        Ok(ComplexPair {
            forward,
            backward,
            s: spec.s,
            ind_forward: locus("ind_forward", &spec.ind_forward)?,
            ind_backward: locus("ind_backward", &spec.ind_backward)?,
        })
    }

    pub fn k(&self) -> usize {
        self.forward.nvars - 1
    }
}

/// φ_f(x) = (1/d)·log‖F(p)‖∞ − log‖p‖∞.
pub fn phi_f(f: &ComplexMap, x: &CProjPoint) -> Result<f64> {
    phi_at(f, x.coords()).map(|(v, _)| v)
}

fn phi_at(f: &ComplexMap, p: &[Complex64]) -> Result<(f64, Vec<Complex64>)> {
    let np = sup_norm(p);
    let q = f.eval(p);
    let nq = sup_norm(&q);
    if !(nq >= NEAR_ZERO * np.powi(f.degree as i32)) {
        return Err(Error::NearIndeterminate { step: 0 });
    }
    Ok((nq.ln() / f.degree as f64 - np.ln(), q))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenSeries {
    /// G_n = Σ_{m ≤ n} d^−m φ_f(f^m x).
    pub values: Vec<f64>,
    /// |G_{n+1} − G_n|.
    pub deltas: Vec<f64>,
}

/// Partial sums of the Green potential along the orbit of x,
/// renormalizing to unit norm at every step.
pub fn green_partial(f: &ComplexMap, x: &CProjPoint, n: usize) -> Result<GreenSeries> {
    let d = f.degree as f64;
    let mut p = x.coords.clone();
    let mut values = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for m in 0..=n {
        let (phi, q) = phi_at(f, &p).map_err(|_| Error::NearIndeterminate { step: m })?;
        acc += phi / d.powi(m as i32);
        values.push(acc);
        let nq = norm2(&q);
        p = q.into_iter().map(|c| c / nq).collect();
    }
    let deltas = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    Ok(GreenSeries { values, deltas })
}

/// Chordal distance ‖p∧q‖/(‖p‖‖q‖) in [0, 1].
pub fn fs_distance(p: &CProjPoint, q: &CProjPoint) -> f64 {
    let (a, b) = (p.coords(), q.coords());
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            s += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
        }
    }
    (s.sqrt() / (norm2(a) * norm2(b))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::henon;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn henon11() -> ComplexMap {
        ComplexMap::from_exact(&henon::henon_pair_int(1, 1).unwrap().forward)
    }

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CProjPoint {
        CProjPoint::new(
            (0..n)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn phi_examples() {
        let f = henon11();
        assert_eq!(phi_f(&f, &CProjPoint::from_real(&[1.0, 0.0, 0.0]).unwrap()).unwrap(), 0.0);
        assert_eq!(
            phi_f(&f, &CProjPoint::from_real(&[0.0, 1.0, 0.0]).unwrap()),
            Err(Error::NearIndeterminate { step: 0 })
        );
        let id = ComplexMap::from_exact(&HomogeneousMap::identity(3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(phi_f(&id, &random_unit(&mut rng, 3)).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn phi_bounded_and_invariant() {
        let f = henon11();
        let bound = f.lift_bound_constant();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let x = random_unit(&mut rng, 3);
            let Ok(v) = phi_f(&f, &x) else { continue };
            assert!(v <= bound + 1e-12);
            let theta: f64 = rng.random_range(0.0..6.28);
            let rot = Complex64::from_polar(1.0, theta);
            let p: Vec<Complex64> = x.coords().iter().map(|c| c * rot * 3.7).collect();
            let (w, _) = phi_at(&f, &p).unwrap();
            assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn green_partial_sums() {
        let f = henon11();
        let x = CProjPoint::from_real(&[2.0, 1.0, 1.0]).unwrap();
        let g = green_partial(&f, &x, 30).unwrap();
        let c = 0.5 * 3f64.ln();
        for (n, dl) in g.deltas.iter().enumerate() {
            assert!(*dl <= c * 0.5f64.powi(n as i32 + 1) + 1e-12, "n = {n}");
        }
        let fixed = CProjPoint::from_real(&[1.0, 0.0, 0.0]).unwrap();
        assert!(green_partial(&f, &fixed, 10).unwrap().values.iter().all(|&v| v == 0.0));
        assert_eq!(green_partial(&f, &x, 0).unwrap().values, vec![phi_f(&f, &x).unwrap()]);
    }

    #[test]
    fn green_matches_height_oracle() {
        // For [2:1:1] the lift stays integral with t = 1, so d^−n log‖F^n(p)‖∞
        // equals the exact canonical-height term; G_n = that − log‖p‖∞.
        let pair = henon::henon_pair_int(1, 1).unwrap();
        let x = RatProjPoint::from_i64(&[2, 1, 1]).unwrap();
        let est = crate::heights::canonical_height(
            &pair,
            &x,
            crate::heights::HeightDirection::Plus,
            8,
        )
        .unwrap();
        let g = green_partial(&henon11(), &CProjPoint::from_rat(&x), 7).unwrap();
        for n in 0..8 {
            let expect = est.terms[n + 1] - est.terms[0];
            assert!((g.values[n] - expect).abs() < 1e-12, "{n}");
        }
    }

    #[test]
    fn pulled_back_functional_equation() {
        let f = henon11();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 30;
        let tail = f.lift_bound_constant() * 0.5f64.powi(n as i32);
        for _ in 0..200 {
            let x = random_unit(&mut rng, 3);
            let (Ok(gx), Ok(fx)) = (green_partial(&f, &x, n), f.apply(&x)) else { continue };
            let Ok(gfx) = green_partial(&f, &fx, n) else { continue };
            let phi = phi_f(&f, &x).unwrap();
            let lhs = gfx.values[n] / 2.0 + phi - gx.values[n];
            assert!(lhs.abs() <= 2.0 * tail + 1e-10, "{lhs}");
        }
    }

    #[test]
    fn jvp_matches_difference_quotient() {
        let f = henon11();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = random_unit(&mut rng, 3);
            let w = random_unit(&mut rng, 3);
            let (v, dv) = f.eval_jvp(p.coords(), w.coords());
            assert_eq!(v, f.eval(p.coords()));
            let h = 1e-6;
            let shift = |s: f64| -> Vec<Complex64> {
                p.coords().iter().zip(w.coords()).map(|(a, b)| a + b * s).collect()
            };
            let (fp, fm) = (f.eval(&shift(h)), f.eval(&shift(-h)));
            for j in 0..3 {
                assert!(((fp[j] - fm[j]) / (2.0 * h) - dv[j]).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn fs_distance_examples() {
        let e0 = CProjPoint::from_real(&[1.0, 0.0, 0.0]).unwrap();
        let e1 = CProjPoint::from_real(&[0.0, 1.0, 0.0]).unwrap();
        let m = CProjPoint::from_real(&[1.0, 1.0, 0.0]).unwrap();
        assert!((fs_distance(&e0, &e1) - 1.0).abs() < 1e-15);
        assert_eq!(fs_distance(&e0, &e0), 0.0);
        assert!((fs_distance(&m, &e0) - 0.5f64.sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (a, b) = (random_unit(&mut rng, 3), random_unit(&mut rng, 3));
            let d = fs_distance(&a, &b);
            assert!((0.0..=1.0).contains(&d));
            assert!((d - fs_distance(&b, &a)).abs() < 1e-15);
        }
    }

    #[test]
    fn complex_spec_round_trip() {
        let exact = henon::henon_pair_int(1, 1).unwrap();
        let mut spec = MapSpec::from_pair(&exact);
        assert_eq!(ComplexPair::from_spec(&spec).unwrap(), ComplexPair::from_exact(&exact));
        // a genuinely complex coefficient on x² of the first coordinate
        let t = spec.forward[0].iter_mut().find(|t| t.e == [2, 0, 0]).unwrap();
        t.c = crate::mapfile::Coefficient::Complex(["1".into(), "0.5".into()]);
        let c = ComplexPair::from_spec(&spec).unwrap();
        let v = c.forward.eval(&[Complex64::new(1.0, 0.0), Complex64::zero(), Complex64::zero()]);
        assert!(v.iter().any(|z| (z - Complex64::new(1.0, 0.5)).norm() < 1e-15));
        assert_eq!(c.ind_forward.generators.len(), 1);
    }

    #[test]
    fn unit_norm_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = random_unit(&mut rng, 4);
            assert!((norm2(x.coords()) - 1.0).abs() < 1e-12);
        }
        assert_eq!(CProjPoint::from_real(&[0.0, 0.0]), Err(Error::ZeroVector));
    }
}
