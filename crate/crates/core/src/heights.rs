//! Naive and canonical heights over ℚ, the Lee inequality scanner and the
//! h′ recursion check. Heights are natural logarithms.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt_sig, ln_abs, ser_sig12};
use crate::projcore::{
    orbit, random_point, validate_pair_seeded, BirationalPair, Direction, HomogeneousMap,
    RatProjPoint,
};

/// h(x) = log max |x_i| over coprime integer coordinates.
pub fn naive_height(x: &RatProjPoint) -> f64 {
    ln_abs(&x.max_abs())
}

/// (1/d)·log(M·c) with M the largest number of monomials in a coordinate
/// and c the largest absolute coefficient: an upper bound for the lift
/// potential (1/d)log‖F(p)‖∞ − log‖p‖∞ at the archimedean place.
pub fn lift_bound_constant(f: &HomogeneousMap) -> f64 {
    let m = BigInt::from(f.max_terms_per_coordinate()) * f.max_abs_coeff();
    ln_abs(&m) / f.degree() as f64
}

/// The constant C₁ in the telescoping bound
/// d^−(n+1) h(f^(n+1) x) − d^−n h(f^n x) ≤ d^−n C₁.
/// For integer lifts of content 1 every finite place contributes 0, since
/// |F(p)|_v ≤ |p|_v^d for v-integral p; only the archimedean term remains.
pub fn c1_constant(f: &HomogeneousMap) -> f64 {
    lift_bound_constant(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightDirection {
    Plus,
    Minus,
}

impl HeightDirection {
    pub fn direction(self) -> Direction {
        match self {
            HeightDirection::Plus => Direction::Forward,
            HeightDirection::Minus => Direction::Backward,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightEstimate {
    pub point: RatProjPoint,
    pub direction: HeightDirection,
    #[serde(serialize_with = "ser_sig12")]
    pub value: f64,
    pub cutoff_n: usize,
    /// One-sided: the limsup is at most value + tail_bound.
    #[serde(serialize_with = "ser_sig12")]
    pub tail_bound: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub c1_constant: f64,
    #[serde(serialize_with = "ser_sig12")]
    pub last_delta: f64,
    pub degree: u32,
    /// d^−n h(f^n x) for n = 0..=N.
    pub terms: Vec<f64>,
}

/// Canonical height estimate d^−N h(f^N x) (or δ^−N h(f^−N x)) with the
/// geometric tail bound C₁ d^(−N+1)/(d−1).
pub fn canonical_height(
    pair: &BirationalPair,
    x: &RatProjPoint,
    direction: HeightDirection,
    cutoff_n: usize,
) -> Result<HeightEstimate> {
    let f = pair.map(direction.direction());
    let d = f.degree();
    if d < 2 {
        return Err(Error::InvalidPair(format!("degree {d} has no canonical height")));
    }
    let pts = orbit(f, x, cutoff_n)?;
    let df = d as f64;
    let terms: Vec<f64> = pts
        .iter()
        .enumerate()
        .map(|(n, p)| naive_height(p) / df.powi(n as i32))
        .collect();
    let value = *terms.last().unwrap();
    let last_delta = if cutoff_n == 0 {
        0.0
    } else {
        (terms[cutoff_n] - terms[cutoff_n - 1]).abs()
    };
    let c1 = c1_constant(f);
    Ok(HeightEstimate {
        point: x.clone(),
        direction,
        value,
        cutoff_n,
        tail_bound: c1 * df.powi(1 - cutoff_n as i32) / (df - 1.0),
        c1_constant: c1,
        last_delta,
        degree: d,
        terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeeSample {
    pub point: RatProjPoint,
    pub h: f64,
    pub h_f: f64,
    pub h_finv: f64,
    pub defect: f64,
}

fn lee_sample(pair: &BirationalPair, x: &RatProjPoint) -> Result<LeeSample> {
    let fx = pair.forward.evaluate(x)?;
    let gx = pair.backward.evaluate(x)?;
    let (d, delta) = (pair.d() as f64, pair.delta() as f64);
    let (h, h_f, h_finv) = (naive_height(x), naive_height(&fx), naive_height(&gx));
    Ok(LeeSample {
        point: x.clone(),
        h,
        h_f,
        h_finv,
        defect: h_f / d + h_finv / delta - (1.0 + 1.0 / (d * delta)) * h,
    })
}

/// (1/d)h(f(x)) + (1/δ)h(f⁻¹(x)) − (1 + 1/(dδ))h(x).
pub fn lee_defect(pair: &BirationalPair, x: &RatProjPoint) -> Result<f64> {
    Ok(lee_sample(pair, x)?.defect)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeeReport {
    pub sample_size: usize,
    /// Candidates rejected (zero vector, on a locus, indeterminate image).
    pub skipped: usize,
    #[serde(serialize_with = "ser_sig12")]
    pub min_defect: f64,
    pub argmin_point: RatProjPoint,
    #[serde(serialize_with = "ser_sig12")]
    pub estimated_c: f64,
    pub seed: u64,
    pub bound: i64,
    #[serde(skip)]
    pub samples: Vec<LeeSample>,
}

impl LeeReport {
    fn from_samples(samples: Vec<LeeSample>, skipped: usize, seed: u64, bound: i64) -> Result<Self> {
        let (i, min) = samples
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (i, s)| match best {
                Some((_, m)) if m <= s.defect => best,
                _ => Some((i, s.defect)),
            })
            .ok_or(Error::EmptySet)?;
        Ok(LeeReport {
            sample_size: samples.len(),
            skipped,
            min_defect: min,
            argmin_point: samples[i].point.clone(),
            estimated_c: (-min).max(0.0),
            seed,
            bound,
            samples,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,h,h_f,h_finv,defect\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.point,
                fmt_sig(s.h, 12),
                fmt_sig(s.h_f, 12),
                fmt_sig(s.h_finv, 12),
                fmt_sig(s.defect, 12)
            );
        }
        out
    }
}

fn require_valid(pair: &BirationalPair, seed: u64) -> Result<()> {
    let report = validate_pair_seeded(pair, seed);
    if report.all_pass() {
        Ok(())
    } else {
        Err(Error::InvalidPair(format!("pair fails validation: {report:?}")))
    }
}

/// Minimum Lee defect over `count` random integer points with coordinates
/// uniform in [−bound, bound], skipping points on the declared loci and
/// points with an indeterminate image.
pub fn lee_scan(pair: &BirationalPair, count: usize, bound: i64, seed: u64) -> Result<LeeReport> {
    if count == 0 || bound < 1 {
        return Err(Error::InvalidArgument("count and bound must be at least 1".into()));
    }
    require_valid(pair, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = pair.k() + 1;
    let mut samples = Vec::with_capacity(count);
    let mut skipped = 0;
    let max_candidates = 100 * count + 1000;
    let mut drawn = 0;
    while samples.len() < count && drawn < max_candidates {
        let batch: Vec<Option<RatProjPoint>> = (0..(count - samples.len()).max(16))
            .map(|_| random_point(&mut rng, n, bound))
            .collect();
        drawn += batch.len();
        let results: Vec<Option<LeeSample>> = batch
            .par_iter()
            .map(|p| {
                let p = p.as_ref()?;
                if pair.on_loci(p) {
                    return None;
                }
                lee_sample(pair, p).ok()
            })
            .collect();
        for r in results {
            match r {
                Some(s) if samples.len() < count => samples.push(s),
                Some(_) => {}
                None => skipped += 1,
            }
        }
    }
    LeeReport::from_samples(samples, skipped, seed, bound)
}

/// Lee report over explicit points.
pub fn lee_scan_points(pair: &BirationalPair, points: &[RatProjPoint]) -> Result<LeeReport> {
    require_valid(pair, 0)?;
    let samples = points
        .iter()
        .map(|p| lee_sample(pair, p))
        .collect::<Result<Vec<_>>>()?;
    LeeReport::from_samples(samples, 0, 0, 0)
}

/// κ = −C·D/(D + 1 − d − δ) with D = dδ, so that h′ = h + κ turns the Lee
/// inequality with constant C into the homogeneous form.
pub fn kappa(c: f64, d: u32, delta: u32) -> Result<f64> {
    let big_d = (d * delta) as f64;
    let den = big_d + 1.0 - d as f64 - delta as f64;
    if den == 0.0 {
        return Err(Error::InvalidPair("κ undefined for degree-1 maps".into()));
    }
    Ok(-c * big_d / den)
}

/// c_n = (D^n + 1)/D^n for n ≥ 1, c_0 = 1.
pub fn c_n(big_d: u64, n: usize) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    let dn = num_traits::pow(BigInt::from(big_d), n);
    BigRational::new(&dn + 1, dn)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPrimeStep {
    pub n: usize,
    pub h_prime: f64,
    /// c_n / c_(n−1) as an exact fraction.
    pub required_ratio: String,
    pub observed_ratio: Option<f64>,
    /// h′_n − (c_n/c_(n−1))·h′_(n−1)
    pub margin: f64,
    pub passes: bool,
    /// h′_(n−1) = 0: the ratio is undefined and the check reduces to h′_n ≥ 0.
    pub vacuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HPrimeReport {
    pub point: RatProjPoint,
    pub cutoff_n: usize,
    pub c: f64,
    pub kappa: f64,
    pub d: u32,
    pub delta: u32,
    pub h_prime_0: f64,
    pub steps: Vec<HPrimeStep>,
    /// c_N · h′_0, the telescoped lower bound for h′_N.
    pub final_lower_bound: f64,
    pub final_holds: bool,
    pub all_pass: bool,
}

/// Floating comparisons of logs absorb this relative margin.
const LOG_MARGIN: f64 = 1e-12;

fn ge_with_margin(lhs: f64, rhs: f64) -> bool {
    lhs - rhs >= -LOG_MARGIN * (1.0 + lhs.abs() + rhs.abs())
}

/// Check h′_n ≥ (c_n/c_(n−1))·h′_(n−1) for n = 1..=N along both orbits of x,
/// where h′_n = d^−n h′(f^n x) + δ^−n h′(f^−n x) and h′ = h + κ.
pub fn hprime_recursion_check(pair: &BirationalPair, x: &RatProjPoint, n: usize, c: f64) -> Result<HPrimeReport> {
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument("C must be nonnegative".into()));
    }
    let (d, delta) = (pair.d(), pair.delta());
    let k = kappa(c, d, delta)?;
    let fwd = orbit(&pair.forward, x, n)?;
    let bwd = orbit(&pair.backward, x, n)?;
    let (df, dl) = (d as f64, delta as f64);
    let h_prime: Vec<f64> = (0..=n)
        .map(|i| {
            let a = (naive_height(&fwd[i]) + k) / df.powi(i as i32);
            if i == 0 {
                return a;
            }
            a + (naive_height(&bwd[i]) + k) / dl.powi(i as i32)
        })
        .collect();
    let big_d = (d * delta) as u64;
    let mut steps = Vec::with_capacity(n);
    for i in 1..=n {
        let r = c_n(big_d, i) / c_n(big_d, i - 1);
        let rf = r.to_f64().unwrap();
        let prev = h_prime[i - 1];
        let rhs = rf * prev;
        steps.push(HPrimeStep {
            n: i,
            h_prime: h_prime[i],
            required_ratio: r.to_string(),
            observed_ratio: (prev != 0.0).then(|| h_prime[i] / prev),
            margin: h_prime[i] - rhs,
            passes: ge_with_margin(h_prime[i], rhs),
            vacuous: prev == 0.0,
        });
    }
    let final_lower_bound = c_n(big_d, n).to_f64().unwrap() * h_prime[0];
    let final_holds = ge_with_margin(h_prime[n], final_lower_bound);
    let all_pass = final_holds && steps.iter().all(|s| s.passes);
    Ok(HPrimeReport {
        point: x.clone(),
        cutoff_n: n,
        c,
        kappa: k,
        d,
        delta,
        h_prime_0: h_prime[0],
        steps,
        final_lower_bound,
        final_holds,
        all_pass,
    })
}

/// Random points whose forward and backward orbits are defined to `n`.
pub fn sample_orbit_points(pair: &BirationalPair, count: usize, bound: i64, n: usize, seed: u64) -> Vec<RatProjPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count + 1000 {
        attempts += 1;
        let Some(p) = random_point(&mut rng, pair.k() + 1, bound) else { continue };
        if orbit(&pair.forward, &p, n).is_ok() && orbit(&pair.backward, &p, n).is_ok() {
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::henon;
    use proptest::prelude::*;

    fn pt(v: &[i64]) -> RatProjPoint {
        RatProjPoint::from_i64(v).unwrap()
    }

    fn henon11() -> BirationalPair {
        henon::henon_pair_int(1, 1).unwrap()
    }

    #[test]
    fn naive_height_examples() {
        assert!((naive_height(&pt(&[1, 2, 3])) - 3f64.ln()).abs() < 1e-15);
        assert!((naive_height(&pt(&[2, 4, 6])) - 3f64.ln()).abs() < 1e-15);
        assert!((naive_height(&pt(&[39, 6, 1])) - 39f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn lift_bound_examples() {
        let f = henon11().forward;
        assert!((lift_bound_constant(&f) - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert_eq!(lift_bound_constant(&HomogeneousMap::identity(3)), 0.0);
        let scaled = f.scaled(&BigInt::from(7)).unwrap();
        assert_eq!(lift_bound_constant(&scaled), lift_bound_constant(&f));
    }

    /// Independent route: affine integer Hénon iteration x' = x² + y + 1,
    /// y' = x, started at (0, 0); t stays 1, so h = log max(|x|, |y|, 1).
    fn affine_oracle(n: usize) -> Vec<f64> {
        let (mut x, mut y) = (BigInt::from(0), BigInt::from(0));
        let mut out = Vec::new();
        for i in 0..=n {
            let m = x.clone().max(-x.clone()).max(y.clone().max(-y.clone())).max(BigInt::one());
            out.push(ln_abs(&m) / 2f64.powi(i as i32));
            let nx = &x * &x + &y + 1;
            y = x;
            x = nx;
        }
        out
    }

    #[test]
    fn canonical_height_matches_affine_oracle() {
        let e = canonical_height(&henon11(), &pt(&[0, 0, 1]), HeightDirection::Plus, 20).unwrap();
        let oracle = affine_oracle(20);
        for (a, b) in e.terms.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // first terms 0, 0, log2/4, log6/8, log39/16, log1528/32
        let expect = [0.0, 0.0, 2f64.ln() / 4.0, 6f64.ln() / 8.0, 39f64.ln() / 16.0, 1528f64.ln() / 32.0];
        for (a, b) in e.terms.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn canonical_height_at_twelve() {
        let e = canonical_height(&henon11(), &pt(&[0, 0, 1]), HeightDirection::Plus, 12).unwrap();
        assert!((e.value - 0.229).abs() < 1e-3);
        assert!(e.last_delta < 1e-3);
        assert!((e.tail_bound - 0.5 * 3f64.ln() / 2048.0).abs() < 1e-15);
    }

    #[test]
    fn point_at_infinity() {
        let pair = henon11();
        let e = canonical_height(&pair, &pt(&[1, 0, 0]), HeightDirection::Plus, 5).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(
            canonical_height(&pair, &pt(&[1, 0, 0]), HeightDirection::Minus, 5),
            Err(Error::IndeterminateEvaluation { step: 0 })
        );
    }

    #[test]
    fn rational_fixed_points_have_zero_height() {
        // a = 0, b = 2: fixed points (0, 0) and (−1, −2)
        let pair = henon::henon_pair_int(0, 2).unwrap();
        for p in [pt(&[0, 0, 1]), pt(&[-1, -2, 1])] {
            assert_eq!(pair.forward.evaluate(&p).unwrap(), p);
            for dir in [HeightDirection::Plus, HeightDirection::Minus] {
                for n in [0, 3, 8] {
                    let e = canonical_height(&pair, &p, dir, n).unwrap();
                    assert!((e.value - naive_height(&p) / 2f64.powi(n as i32)).abs() < 1e-15);
                    assert!(e.value <= e.tail_bound);
                }
            }
        }
    }

    #[test]
    fn lee_defect_examples() {
        let pair = henon11();
        let d = lee_defect(&pair, &pt(&[2, 1, 1])).unwrap();
        assert!((d - (0.5 * 6f64.ln() - 1.25 * 2f64.ln())).abs() < 1e-14);
        assert!((d - 0.0294).abs() < 1e-4);
        assert_eq!(lee_defect(&pair, &pt(&[0, 0, 1])).unwrap(), 0.0);
        let r = lee_scan_points(&pair, &[pt(&[2, 1, 1])]).unwrap();
        assert_eq!(r.sample_size, 1);
        assert!((r.min_defect - d).abs() < 1e-15);
        assert_eq!(r.estimated_c, 0.0);
    }

    #[test]
    fn lee_scan_reproducible_and_rechecks() {
        let pair = henon11();
        let a = lee_scan(&pair, 200, 100, 7).unwrap();
        let b = lee_scan(&pair, 200, 100, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sample_size, 200);
        assert!(a.estimated_c.is_finite());
        assert_eq!(lee_defect(&pair, &a.argmin_point).unwrap(), a.min_defect);
        assert!(a.to_csv().starts_with("point,h,h_f,h_finv,defect\n"));
        assert_eq!(a.to_csv().lines().count(), 201);
    }

    #[test]
    fn lee_scan_refuses_invalid_pair() {
        let pair = henon11();
        let other = henon::henon_pair_int(2, 1).unwrap();
        let bad = BirationalPair::new(
            pair.forward.clone(),
            other.backward.clone(),
            1,
            pair.ind_forward.clone(),
            pair.ind_backward.clone(),
        )
        .unwrap();
        assert!(matches!(lee_scan(&bad, 10, 10, 0), Err(Error::InvalidPair(_))));
    }

    #[test]
    fn c_n_ratios() {
        assert_eq!(c_n(4, 1) / c_n(4, 0), BigRational::new(5.into(), 4.into()));
        assert_eq!(c_n(4, 2) / c_n(4, 1), BigRational::new(17.into(), 20.into()));
        assert_eq!(kappa(1.0, 2, 2).unwrap(), -4.0);
        assert!(kappa(1.0, 1, 1).is_err());
    }

    #[test]
    fn hprime_at_example_point() {
        let pair = henon11();
        let scan = lee_scan(&pair, 300, 100, 0).unwrap();
        let r = hprime_recursion_check(&pair, &pt(&[2, 1, 1]), 6, scan.estimated_c).unwrap();
        assert!(r.all_pass, "{r:?}");
        assert_eq!(r.steps[1].required_ratio, "17/20");
    }

    #[test]
    fn hprime_on_fixed_point_compares_constants() {
        let pair = henon::henon_pair_int(0, 2).unwrap();
        let r = hprime_recursion_check(&pair, &pt(&[0, 0, 1]), 4, 0.5).unwrap();
        for s in &r.steps {
            let expect = r.kappa * (2f64.powi(-(s.n as i32)) * 2.0);
            assert!((s.h_prime - expect).abs() < 1e-12);
        }
        assert!(r.all_pass);
    }

    #[test]
    fn functoriality_bound() {
        let pair = henon11();
        let l = lift_bound_constant(&pair.forward);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        while checked < 1000 {
            let Some(x) = random_point(&mut rng, 3, 1000) else { continue };
            let Ok(fx) = pair.forward.evaluate(&x) else { continue };
            checked += 1;
            assert!(naive_height(&fx) <= 2.0 * naive_height(&x) + 2.0 * l + 1e-12);
        }
    }

    #[test]
    fn telescoping_and_functional_equation() {
        let pair = henon11();
        for x in sample_orbit_points(&pair, 25, 50, 10, 11) {
            let e = canonical_height(&pair, &x, HeightDirection::Plus, 10).unwrap();
            for n in 0..10 {
                assert!(e.terms[n + 1] - e.terms[n] <= e.c1_constant * 2f64.powi(-(n as i32)) + 1e-12);
            }
            let fx = pair.forward.evaluate(&x).unwrap();
            let efx = canonical_height(&pair, &fx, HeightDirection::Plus, 9).unwrap();
            let ex = canonical_height(&pair, &x, HeightDirection::Plus, 9).unwrap();
            assert!((efx.value - 2.0 * ex.value).abs() <= 3.0 * ex.tail_bound + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn height_is_representative_invariant(
            v in proptest::collection::vec(-1000i64..1000, 3),
            k in 1i64..500,
        ) {
            prop_assume!(v.iter().any(|&c| c != 0));
            let a = pt(&v);
            let scaled: Vec<i64> = v.iter().map(|c| c * k).collect();
            let b = pt(&scaled);
            prop_assert_eq!(naive_height(&a), naive_height(&b));
            prop_assert!(naive_height(&a) >= 0.0);
        }
    }
}
