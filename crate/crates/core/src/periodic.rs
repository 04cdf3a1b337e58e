//! Periodic points of maps of ℙ² (exact fixed points of the Hénon family,
//! multistart Newton otherwise) and empirical equidistribution reports.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greenc::{fs_distance, locus_distance, CProjPoint, ComplexLocus, ComplexMap, ComplexPair, GridMeasure};
use crate::numeric::compensated_sum;
use crate::projcore::{BirationalPair, LocusKind, RatProjPoint};

/// Exact fixed points of f(x, y) = (x² + y + a, bx): y = bx with
/// x² + (b − 1)x + a = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HenonFixedPoints {
    pub a: String,
    pub b: String,
    /// Coefficients of x² + c₁x + c₀ as [1, c₁, c₀].
    pub quadratic: [String; 3],
    pub discriminant: String,
    /// x = (1 − b ± √disc)/2, y = b·x.
    pub description: String,
    /// Rational points when the discriminant is a square in ℚ.
    pub rational_points: Option<Vec<RatProjPoint>>,
    pub double_root: bool,
    /// Double-precision embeddings (x, y) of the distinct roots.
    #[serde(skip)]
    pub embeddings: Vec<(Complex64, Complex64)>,
}

fn rational_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer().sqrt(), q.denom().sqrt());
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRational::new(n, d))
}

pub fn fixed_points_exact_henon(a: &BigRational, b: &BigRational) -> Result<HenonFixedPoints> {
    if b.is_zero() {
        return Err(Error::DegenerateFamily("b = 0".into()));
    }
    let one = BigRational::one();
    let c1 = b - &one;
    let disc = &c1 * &c1 - BigRational::from_integer(4.into()) * a;
    let two = BigRational::from_integer(2.into());
    let double_root = disc.is_zero();
    let rational_points = rational_sqrt(&disc).map(|r| {
        let mut xs = vec![(-&c1 + &r) / &two];
        if !double_root {
            xs.push((-&c1 - &r) / &two);
        }
        xs.into_iter()
            .map(|x| RatProjPoint::normalize(&[x.clone(), b * &x, one.clone()]).expect("affine point"))
            .collect()
    });
    let (dc, cf, bf) = (
        disc.to_f64().unwrap_or(f64::NAN),
        c1.to_f64().unwrap_or(f64::NAN),
        b.to_f64().unwrap_or(f64::NAN),
    );
    let sq = Complex64::new(dc, 0.0).sqrt();
    let mut embeddings = vec![(-cf + sq) / 2.0];
    if !double_root {
        embeddings.push((-cf - sq) / 2.0);
    }
    Ok(HenonFixedPoints {
        a: a.to_string(),
        b: b.to_string(),
        quadratic: ["1".into(), c1.to_string(), a.to_string()],
        discriminant: disc.to_string(),
        description: format!("x = ({} ± sqrt({disc}))/2, y = {b}·x", -c1),
        rational_points,
        double_root,
        embeddings: embeddings.into_iter().map(|x| (x, x * bf)).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    /// Affine coordinates (x, y) in the chart t = 1, as [re, im] pairs.
    pub affine: [Complex64; 2],
    pub point: CProjPoint,
    /// ‖f^n(x) − x‖₂ in the affine chart.
    pub residual: f64,
    /// Moduli of the eigenvalues of D(f^n) at the point, descending.
    pub multipliers: [f64; 2],
    pub saddle: bool,
    pub least_period: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPointSet {
    pub period: usize,
    pub points: Vec<PeriodicPoint>,
    pub tol: f64,
    pub dedup_tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub converged_starts: usize,
    pub exact_points: Option<HenonFixedPoints>,
    pub note: Option<String>,
}

impl PeriodicPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn count_least_period(&self, m: usize) -> usize {
        self.points.iter().filter(|p| p.least_period == m).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    /// Starts are drawn uniformly from [−r, r]⁴ in the affine chart.
    pub box_radius: f64,
    pub max_steps: usize,
    pub damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            box_radius: 3.0,
            max_steps: 200,
            damping: 0.5,
        }
    }
}

/// Default number of starts: 50·d^n.
pub fn default_starts(d: u32, n: usize) -> usize {
    50usize.saturating_mul((d as usize).saturating_pow(n as u32))
}

type C2 = [Complex64; 2];
type M2 = [[Complex64; 2]; 2];

const ESCAPE: f64 = 1e8;

/// Multiplier moduli within this of 1 count as neutral.
const SADDLE_MARGIN: f64 = 1e-6;

/// One affine step with its Jacobian, or None near t = 0 or on escape.
fn affine_step(f: &ComplexMap, x: &C2) -> Option<(C2, M2)> {
    let one = Complex64::new(1.0, 0.0);
    let p = [x[0], x[1], one];
    let (v, dv0) = f.eval_jvp(&p, &[one, Complex64::zero(), Complex64::zero()]);
    let (_, dv1) = f.eval_jvp(&p, &[Complex64::zero(), one, Complex64::zero()]);
    let t = v[2];
    let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(t.norm() > 1e-12 * scale) {
        return None;
    }
    let y = [v[0] / t, v[1] / t];
    if !(y[0].norm() < ESCAPE && y[1].norm() < ESCAPE) {
        return None;
    }
    let dv = [dv0, dv1];
    let mut j = [[Complex64::zero(); 2]; 2];
    for (col, d) in dv.iter().enumerate() {
        for row in 0..2 {
            j[row][col] = (d[row] - y[row] * d[2]) / t;
        }
    }
    Some((y, j))
}

fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[Complex64::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// f^n(x) and D(f^n)(x).
fn iterate(f: &ComplexMap, n: usize, x: &C2) -> Option<(C2, M2)> {
    let one = Complex64::new(1.0, 0.0);
    let mut j = [[one, Complex64::zero()], [Complex64::zero(), one]];
    let mut y = *x;
    for _ in 0..n {
        let (z, jz) = affine_step(f, &y)?;
        j = mat_mul(&jz, &j);
        y = z;
    }
    Some((y, j))
}

fn dist(a: &C2, b: &C2) -> f64 {
    ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
}

/// ‖f^n(x) − x‖₂, or None if the orbit leaves the chart.
pub fn residual(f: &ComplexMap, n: usize, x: &C2) -> Option<f64> {
    iterate(f, n, x).map(|(y, _)| dist(&y, x))
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm()))?;
        if !(a[piv][c].norm() > 0.0) {
            return None;
        }
        a.swap(piv, c);
        b.swap(piv, c);
        for r in c + 1..n {
            let factor = a[r][c] / a[c][c];
            if factor == Complex64::zero() {
                continue;
            }
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= factor * v;
            }
            let v = b[c];
            b[r] -= factor * v;
        }
    }
    let mut x = vec![Complex64::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for k in r + 1..n {
            acc -= a[r][k] * x[k];
        }
        x[r] = acc / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Residuals f(x_i) − x_{i+1 mod n} of the cycle system and their
/// Jacobians, or None if some point leaves the chart.
fn cycle_residual(f: &ComplexMap, xs: &[C2]) -> Option<(Vec<Complex64>, Vec<M2>, f64)> {
    let n = xs.len();
    let mut res = Vec::with_capacity(2 * n);
    let mut jacs = Vec::with_capacity(n);
    for i in 0..n {
        let (y, j) = affine_step(f, &xs[i])?;
        let next = &xs[(i + 1) % n];
        res.push(y[0] - next[0]);
        res.push(y[1] - next[1]);
        jacs.push(j);
    }
    let norm = res.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Some((res, jacs, norm))
}

fn cycle_step(xs: &[C2], res: &[Complex64], jacs: &[M2]) -> Option<Vec<C2>> {
    let n = xs.len();
    let dim = 2 * n;
    let mut a = vec![vec![Complex64::zero(); dim]; dim];
    let one = Complex64::new(1.0, 0.0);
    for i in 0..n {
        let next = (i + 1) % n;
        for r in 0..2 {
            for c in 0..2 {
                a[2 * i + r][2 * i + c] += jacs[i][r][c];
            }
            a[2 * i + r][2 * next + r] -= one;
        }
    }
    let delta = solve(a, res.iter().map(|c| -c).collect())?;
    Some((0..n).map(|i| [delta[2 * i], delta[2 * i + 1]]).collect())
}

/// Damped Newton on the cycle system f(x_i) = x_{i+1 mod n}: backtracking
/// by the damping factor until the residual decreases, then a few full
/// polishing steps.
fn newton_cycle(f: &ComplexMap, mut xs: Vec<C2>, opts: &NewtonOptions) -> Option<Vec<C2>> {
    let (mut res, mut jacs, mut r) = cycle_residual(f, &xs)?;
    let mut steps = 0;
    while r >= opts.tol {
        steps += 1;
        if steps > opts.max_steps {
            return None;
        }
        let delta = cycle_step(&xs, &res, &jacs)?;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<C2> = xs
                .iter()
                .zip(&delta)
                .map(|(x, d)| [x[0] + d[0] * step, x[1] + d[1] * step])
                .collect();
            if let Some((rc, jc, nc)) = cycle_residual(f, &cand) {
                if nc < r {
                    (xs, res, jacs, r) = (cand, rc, jc, nc);
                    accepted = true;
                    break;
                }
            }
            step *= opts.damping;
        }
        if !accepted {
            return None;
        }
    }
    for _ in 0..3 {
        let Some(delta) = cycle_step(&xs, &res, &jacs) else { break };
        let cand: Vec<C2> = xs.iter().zip(&delta).map(|(x, d)| [x[0] + d[0], x[1] + d[1]]).collect();
        match cycle_residual(f, &cand) {
            Some((rc, jc, nc)) if nc < r => (xs, res, jacs, r) = (cand, rc, jc, nc),
            _ => break,
        }
    }
    Some(xs)
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|m| n % m == 0).collect()
}

/// Distance within which a converged point is snapped to a point of lower
/// period. Where f^n − id has a multiple root (a lower-period point whose
/// multiplier is a root of unity, as for the parabolic fixed points of
/// a = b = 1) Newton converges only linearly and stops at distance about
/// tol^(1/m) from the root.
const SNAP_RADIUS: f64 = 1e-2;

/// Least period of a converged point: the smallest proper divisor m of n
/// for which the cycle system of length m, started on the orbit of x,
/// converges to a point within SNAP_RADIUS of x. Returns the period and
/// the (possibly snapped) point.
fn least_period(f: &ComplexMap, n: usize, x: &C2, opts: &NewtonOptions) -> (usize, C2) {
    for m in divisors(n) {
        if m == n {
            break;
        }
        if !matches!(residual(f, m, x), Some(r) if r < 10.0 * SNAP_RADIUS) {
            continue;
        }
        let mut orbit = vec![*x];
        for _ in 1..m {
            match affine_step(f, orbit.last().unwrap()) {
                Some((y, _)) => orbit.push(y),
                None => break,
            }
        }
        if orbit.len() < m {
            continue;
        }
        if let Some(ys) = newton_cycle(f, orbit, opts) {
            if dist(&ys[0], x) < SNAP_RADIUS && matches!(residual(f, m, &ys[0]), Some(r) if r < opts.tol) {
                return (m, ys[0]);
            }
        }
    }
    (n, *x)
}

fn multipliers(j: &M2) -> [f64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let sq = (tr * tr - det * 4.0).sqrt();
    let (l1, l2) = (((tr + sq) / 2.0).norm(), ((tr - sq) / 2.0).norm());
    [l1.max(l2), l1.min(l2)]
}

fn lex_key(x: &C2) -> [f64; 4] {
    [x[0].re, x[0].im, x[1].re, x[1].im]
}

/// Multistart damped Newton for the points of period dividing n, in the
/// affine chart t = 1. Each start is a random n-tuple solved as the cycle
/// system; every point of a converged cycle is kept once it re-verifies
/// ‖f^n(x) − x‖ < tol.
pub fn periodic_points_numeric(
    pair: &ComplexPair,
    n: usize,
    starts: usize,
    seed: u64,
    opts: &NewtonOptions,
) -> Result<PeriodicPointSet> {
    if pair.k() != 2 {
        return Err(Error::WrongDimension(format!(
            "periodic points are computed in the affine chart of ℙ², got k = {}",
            pair.k()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("period must be at least 1".into()));
    }
    let f = &pair.forward;
    let r = opts.box_radius;
    const BATCH: usize = 32;
    let found: Vec<Vec<(C2, f64)>> = (0..starts.div_ceil(BATCH))
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(starts - b * BATCH);
            (0..count)
                .map(|_| {
                    let mut c = || Complex64::new(rng.random_range(-r..r), rng.random_range(-r..r));
                    let xs0: Vec<C2> = (0..n).map(|_| [c(), c()]).collect();
                    newton_cycle(f, xs0, opts)
                        .map(|xs| {
                            xs.into_iter()
                                .filter_map(|x| residual(f, n, &x).filter(|&res| res < opts.tol).map(|res| (x, res)))
                                .collect()
                        })
                        .unwrap_or_default()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let converged_starts = found.iter().filter(|v| !v.is_empty()).count();
    let raw: Vec<C2> = found.into_iter().flatten().map(|(x, _)| x).collect();
    let mut converged: Vec<(C2, f64, usize)> = raw
        .par_iter()
        .filter_map(|x| {
            let (lp, y) = least_period(f, n, x, opts);
            let res = residual(f, n, &y)?;
            (res < opts.tol).then_some((y, res, lp))
        })
        .collect();
    converged.sort_by(|a, b| {
        lex_key(&a.0)
            .iter()
            .zip(lex_key(&b.0).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let dedup_tol = 10.0 * opts.tol;
    let mut kept: Vec<(C2, f64, usize, CProjPoint)> = Vec::new();
    for (x, res, lp) in converged {
        let p = CProjPoint::new(vec![x[0], x[1], Complex64::new(1.0, 0.0)])?;
        if kept.iter().any(|(_, _, _, q)| fs_distance(&p, q) <= dedup_tol) {
            continue;
        }
        let near_locus = [&pair.ind_forward, &pair.ind_backward]
            .iter()
            .any(|l| locus_distance(&p, l) < 1e-8);
        if !near_locus {
            kept.push((x, res, lp, p));
        }
    }
    let points: Vec<PeriodicPoint> = kept
        .into_par_iter()
        .map(|(x, res, lp, p)| {
            let (_, j) = iterate(f, n, &x).expect("converged point iterates");
            let mult = multipliers(&j);
            PeriodicPoint {
                affine: x,
                point: p,
                residual: res,
                multipliers: mult,
                saddle: mult[0] > 1.0 + SADDLE_MARGIN && mult[1] < 1.0 - SADDLE_MARGIN,
                least_period: lp,
            }
        })
        .collect();
    let note = points.is_empty().then(|| format!("NoConvergence: no start converged ({starts} starts)"));
    Ok(PeriodicPointSet {
        period: n,
        points,
        tol: opts.tol,
        dedup_tol,
        starts,
        seed,
        converged_starts,
        exact_points: None,
        note,
    })
}

/// Continued-fraction rational approximation with denominator ≤ max_den.
fn rationalize(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    for _ in 0..40 {
        let a = v.floor();
        let ai = a as i64;
        let (h2, k2) = (ai.checked_mul(h1)?.checked_add(h0)?, ai.checked_mul(k1)?.checked_add(k0)?);
        if k2 > max_den {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (x - h1 as f64 / k1 as f64).abs() < 1e-9 {
            return Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)));
        }
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    ((x - h1 as f64 / k1 as f64).abs() < 1e-9 && k1 > 0)
        .then(|| BigRational::new(BigInt::from(h1), BigInt::from(k1)))
}

/// The points of a numeric set that are ℚ-rational: real coordinates close
/// to a fraction with small denominator, confirmed by exact iteration of the
/// integer lift.
pub fn rational_periodic_points(pair: &BirationalPair, set: &PeriodicPointSet, max_den: i64) -> Vec<RatProjPoint> {
    let mut out = Vec::new();
    for p in &set.points {
        if p.affine.iter().any(|c| c.im.abs() > 1e-9) {
            continue;
        }
        let (Some(x), Some(y)) = (rationalize(p.affine[0].re, max_den), rationalize(p.affine[1].re, max_den)) else {
            continue;
        };
        let Ok(q) = RatProjPoint::normalize(&[x, y, BigRational::one()]) else { continue };
        let mut z = q.clone();
        let mut ok = true;
        for _ in 0..p.least_period {
            match pair.forward.evaluate(&z) {
                Ok(w) => z = w,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && z == q && !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

/// Fraction of the points within chordal distance eps of the line through
/// p and q.
pub fn line_mass(set: &PeriodicPointSet, p: &CProjPoint, q: &CProjPoint, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    if fs_distance(p, q) < 1e-12 {
        return Err(Error::DegenerateLine);
    }
    if set.points.is_empty() {
        return Err(Error::EmptySet);
    }
    let line = ComplexLocus {
        kind: LocusKind::Linear,
        generators: vec![p.clone(), q.clone()],
        dim: 1,
    };
    let near = set.points.iter().filter(|x| locus_distance(&x.point, &line) < eps).count();
    Ok(near as f64 / set.points.len() as f64)
}

/// Labels of the fixed test-function library (version 1).
pub const TEST_FUNCTIONS: [&str; 12] = [
    "one",
    "re_z",
    "im_z",
    "re_w",
    "im_w",
    "abs2_z",
    "abs2_w",
    "re_z_conj_w",
    "rbin_0",
    "rbin_1",
    "rbin_2",
    "rbin_3",
];

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let (a, b) = ((-1.0 / t).exp(), (-1.0 / (1.0 - t)).exp());
    a / (a + b)
}

/// The 12 test functions at an affine point (z, w) for box half-width l:
/// the constant, coordinate moments of degree 1 and 2 scaled by l and cut
/// off smoothly between radius l/2 and l, and indicators of the radial bins
/// [0, l/4), [l/4, l/2), [l/2, 3l/4), [3l/4, ∞).
pub fn test_functions(z: Complex64, w: Complex64, l: f64) -> [f64; 12] {
    let r = (z.norm_sqr() + w.norm_sqr()).sqrt();
    let chi = 1.0 - smooth_step((r - l / 2.0) / (l / 2.0));
    let (zs, ws) = (z / l, w / l);
    let bin = ((4.0 * r / l).floor() as usize).min(3);
    let mut out = [
        1.0,
        chi * zs.re,
        chi * zs.im,
        chi * ws.re,
        chi * ws.im,
        chi * zs.norm_sqr(),
        chi * ws.norm_sqr(),
        chi * (zs * ws.conj()).re,
        0.0,
        0.0,
        0.0,
        0.0,
    ];
    out[8 + bin] = 1.0;
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDiscrepancy {
    pub a: String,
    pub b: String,
    pub max_abs_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub test_functions: Vec<String>,
    pub measures: Vec<String>,
    /// integrals[f][m]: test function f against measure m.
    pub integrals: Vec<Vec<f64>>,
    pub pairwise: Vec<PairDiscrepancy>,
    /// Discrepancies between consecutive periodic-point sets.
    pub consecutive: Vec<f64>,
    pub consecutive_non_increasing: bool,
    pub max_abs_difference: f64,
    pub box_half_width: f64,
}

impl DiscrepancyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("function");
        for m in &self.measures {
            out.push(',');
            out.push_str(m);
        }
        out.push('\n');
        for (label, row) in self.test_functions.iter().zip(&self.integrals) {
            out.push_str(label);
            for v in row {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
        out
    }
}

fn max_diff(integrals: &[Vec<f64>], i: usize, j: usize) -> f64 {
    integrals.iter().map(|row| (row[i] - row[j]).abs()).fold(0.0, f64::max)
}

/// Integrals of the test-function library against the uniform measure on
/// each set (affine points only) and against the normalized grid measure.
pub fn equidist_report(
    sets: &[PeriodicPointSet],
    grid: Option<&GridMeasure>,
    box_half_width: f64,
) -> Result<DiscrepancyReport> {
    if sets.len() + usize::from(grid.is_some()) < 2 {
        return Err(Error::InvalidArgument(
            "need at least two point sets, or one set and a grid".into(),
        ));
    }
    if sets.iter().any(|s| s.points.is_empty()) {
        return Err(Error::EmptySet);
    }
    let l = box_half_width;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut measures = Vec::new();
    for s in sets {
        let vals: Vec<[f64; 12]> = s
            .points
            .iter()
            .map(|p| test_functions(p.affine[0], p.affine[1], l))
            .collect();
        let m = vals.len() as f64;
        columns.push((0..12).map(|f| compensated_sum(vals.iter().map(|v| v[f])) / m).collect());
        measures.push(format!("period_{}", s.period));
    }
    if let Some(g) = grid {
        if !(g.total_mass > 0.0) {
            return Err(Error::EmptySet);
        }
        let vals: Vec<(f64, [f64; 12])> = g
            .cell_masses
            .par_iter()
            .enumerate()
            .map(|(i, &m)| {
                let (z, w) = g.cell_centre(i);
                (m, test_functions(z, w, l))
            })
            .collect();
        columns.push(
            (0..12)
                .map(|f| compensated_sum(vals.iter().map(|(m, v)| m * v[f])) / g.total_mass)
                .collect(),
        );
        measures.push(format!("grid_n{}", g.n));
    }
    let integrals: Vec<Vec<f64>> = (0..12).map(|f| columns.iter().map(|c| c[f]).collect()).collect();
    let mut pairwise = Vec::new();
    for i in 0..measures.len() {
        for j in i + 1..measures.len() {
            pairwise.push(PairDiscrepancy {
                a: measures[i].clone(),
                b: measures[j].clone(),
                max_abs_difference: max_diff(&integrals, i, j),
            });
        }
    }
    let consecutive: Vec<f64> = (1..sets.len()).map(|i| max_diff(&integrals, i - 1, i)).collect();
    let consecutive_non_increasing = consecutive.windows(2).all(|w| w[1] <= w[0]);
    let max_abs_difference = pairwise.iter().map(|p| p.max_abs_difference).fold(0.0, f64::max);
    Ok(DiscrepancyReport {
        test_functions: TEST_FUNCTIONS.iter().map(|s| s.to_string()).collect(),
        measures,
        integrals,
        pairwise,
        consecutive,
        consecutive_non_increasing,
        max_abs_difference,
        box_half_width: l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::henon;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn henon_c(a: i64, b: i64) -> ComplexPair {
        ComplexPair::from_exact(&henon::henon_pair_int(a, b).unwrap())
    }

    #[test]
    fn exact_fixed_points() {
        let e = fixed_points_exact_henon(&q(1), &q(1)).unwrap();
        assert_eq!(e.discriminant, "-4");
        assert!(e.rational_points.is_none());
        let i = Complex64::new(0.0, 1.0);
        assert!(e.embeddings.contains(&(i, i)) && e.embeddings.contains(&(-i, -i)));
        let e = fixed_points_exact_henon(&q(0), &q(1)).unwrap();
        assert!(e.double_root);
        assert_eq!(e.rational_points.unwrap(), vec![RatProjPoint::from_i64(&[0, 0, 1]).unwrap()]);
        let e = fixed_points_exact_henon(&q(0), &q(2)).unwrap();
        let pts = e.rational_points.unwrap();
        assert_eq!(pts.len(), 2);
        assert!(pts.contains(&RatProjPoint::from_i64(&[-1, -2, 1]).unwrap()));
        assert!(pts.contains(&RatProjPoint::from_i64(&[0, 0, 1]).unwrap()));
        assert_eq!(fixed_points_exact_henon(&q(1), &q(0)), Err(Error::DegenerateFamily("b = 0".into())));
    }

    #[test]
    fn numeric_fixed_points_match_exact() {
        let set = periodic_points_numeric(&henon_c(1, 1), 1, 200, 0, &Default::default()).unwrap();
        assert_eq!(set.len(), 2);
        let exact = fixed_points_exact_henon(&q(1), &q(1)).unwrap();
        for (x, y) in &exact.embeddings {
            assert!(set.points.iter().any(|p| (p.affine[0] - x).norm() < 1e-8 && (p.affine[1] - y).norm() < 1e-8));
        }
        for p in &set.points {
            let r = residual(&henon_c(1, 1).forward, 1, &p.affine).unwrap();
            assert!(r < 1e-10);
        }
    }

    #[test]
    fn period_two_count() {
        let set = periodic_points_numeric(&henon_c(1, 1), 2, 200, 0, &Default::default()).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.count_least_period(1), 2);
        assert_eq!(set.count_least_period(2), 2);
        for p in &set.points {
            assert!(p.residual < 1e-10);
        }
        for (i, a) in set.points.iter().enumerate() {
            for b in &set.points[i + 1..] {
                assert!(fs_distance(&a.point, &b.point) > set.dedup_tol);
            }
        }
    }

    #[test]
    fn no_starts_is_reported() {
        let set = periodic_points_numeric(&henon_c(1, 1), 1, 0, 0, &Default::default()).unwrap();
        assert!(set.is_empty());
        assert!(set.note.as_deref().unwrap().starts_with("NoConvergence"));
    }

    #[test]
    fn stable_under_seed_change() {
        let p = henon_c(1, 1);
        let f = &p.forward;
        let a = periodic_points_numeric(&p, 3, 400, 1, &Default::default()).unwrap();
        let b = periodic_points_numeric(&p, 3, 800, 2, &Default::default()).unwrap();
        for x in &a.points {
            let matched = b.points.iter().any(|y| fs_distance(&x.point, &y.point) < 1e-8);
            // a point missing from the other run must still verify there
            assert!(matched || residual(f, 3, &x.affine).unwrap() < 1e-10);
        }
        assert!(b.len() >= a.len());
    }

    #[test]
    fn rational_points_recovered() {
        let pair = henon::henon_pair_int(0, 2).unwrap();
        let set = periodic_points_numeric(&ComplexPair::from_exact(&pair), 1, 100, 0, &Default::default()).unwrap();
        let rat = rational_periodic_points(&pair, &set, 1000);
        assert_eq!(rat.len(), 2);
        assert_eq!(rationalize(0.75, 100), Some(BigRational::new(3.into(), 4.into())));
        assert_eq!(rationalize(std::f64::consts::PI, 100), None);
    }

    fn set_of(points: &[[f64; 3]]) -> PeriodicPointSet {
        PeriodicPointSet {
            period: 1,
            points: points
                .iter()
                .map(|c| PeriodicPoint {
                    affine: [Complex64::new(c[0] / c[2], 0.0), Complex64::new(c[1] / c[2], 0.0)],
                    point: CProjPoint::from_real(c).unwrap(),
                    residual: 0.0,
                    multipliers: [1.0, 1.0],
                    saddle: false,
                    least_period: 1,
                })
                .collect(),
            tol: 1e-10,
            dedup_tol: 1e-9,
            starts: 0,
            seed: 0,
            converged_starts: 0,
            exact_points: None,
            note: None,
        }
    }

    #[test]
    fn line_mass_examples() {
        let s = set_of(&[[1.0, 0.0, 1.0], [2.0, 0.0, 1.0], [-5.0, 0.0, 1.0]]);
        let p = CProjPoint::from_real(&[0.0, 0.0, 1.0]).unwrap();
        let q = CProjPoint::from_real(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(line_mass(&s, &p, &q, 1e-3).unwrap(), 1.0);
        let r = CProjPoint::from_real(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(line_mass(&s, &q, &r, 1e-3).unwrap(), 0.0);
        assert_eq!(line_mass(&s, &q, &q, 1e-3), Err(Error::DegenerateLine));
    }

    #[test]
    fn constant_row_is_one() {
        let a = set_of(&[[1.0, 0.0, 1.0], [2.0, 0.0, 1.0]]);
        let b = set_of(&[[0.5, 0.5, 1.0]]);
        let r = equidist_report(&[a.clone(), b], None, 3.0).unwrap();
        assert_eq!(r.integrals[0], vec![1.0, 1.0]);
        assert_eq!(r.integrals.len(), 12);
        // the bins partition space
        for m in 0..2 {
            let s: f64 = (8..12).map(|f| r.integrals[f][m]).sum();
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert!(r.to_csv().starts_with("function,period_1,period_1\none,"));
        assert!(matches!(equidist_report(&[a], None, 3.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn test_functions_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let mut c = || Complex64::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
            let v = test_functions(c(), c(), 3.0);
            assert!(v.iter().all(|x| x.abs() <= 1.0 + 1e-12));
        }
    }
}
