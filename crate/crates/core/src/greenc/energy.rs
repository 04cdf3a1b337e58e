//! Partial sums of the energy series along the orbits of the
//! indeterminacy loci.

use num_complex::Complex64;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fs_distance, norm2, phi_at, CProjPoint, ComplexLocus, ComplexMap, ComplexPair};
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, fit_geometric_ratio};
use crate::projcore::LocusKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergySide {
    /// Orbit of I_{f⁻¹} under f, weights d^(−sn).
    Forward,
    /// Orbit of I_f under f⁻¹, weights δ^(−n(k−s)).
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyMethod {
    PointOrbitExact,
    DistanceProxy,
    MonteCarlo,
}

impl EnergyMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EnergyMethod::PointOrbitExact => "point-orbit-exact",
            EnergyMethod::DistanceProxy => "distance-proxy",
            EnergyMethod::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyOptions {
    /// Samples per term for the Monte Carlo method.
    pub samples: usize,
    pub seed: u64,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        EnergyOptions { samples: 2000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub s: usize,
    pub side: EnergySide,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub term_kind: EnergyMethod,
    /// Geometric ratio fitted to the envelope max_{m ≥ n} |term_m|.
    pub decay_fit: f64,
    /// Set for the Monte Carlo method, which is approximate.
    pub approximate: bool,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Samples dropped because they landed numerically on a locus.
    pub skipped_samples: usize,
}

impl EnergySeries {
    fn from_terms(s: usize, side: EnergySide, method: EnergyMethod, terms: Vec<f64>) -> Self {
        let mut partial_sums = Vec::with_capacity(terms.len());
        let mut acc = 0.0;
        for t in &terms {
            acc += t;
            partial_sums.push(acc);
        }
        let mut envelope = terms.iter().map(|t| t.abs()).collect::<Vec<_>>();
        for i in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[i] = envelope[i].max(envelope[i + 1]);
        }
        EnergySeries {
            s,
            side,
            decay_fit: fit_geometric_ratio(&envelope),
            terms,
            partial_sums,
            term_kind: method,
            approximate: method == EnergyMethod::MonteCarlo,
            samples: None,
            seed: None,
            skipped_samples: 0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,term,partial_sum\n");
        for (n, (t, p)) in self.terms.iter().zip(&self.partial_sums).enumerate() {
            out.push_str(&format!("{n},{t:e},{p:e}\n"));
        }
        out
    }
}

struct Side<'a> {
    map: &'a ComplexMap,
    locus: &'a ComplexLocus,
    opposite: &'a ComplexLocus,
    /// log of the per-step weight base.
    log_weight: f64,
    form_power: usize,
}

fn side_data(pair: &ComplexPair, side: EnergySide) -> Side<'_> {
    let k = pair.k();
    let (d, delta) = (pair.forward.degree() as f64, pair.backward.degree() as f64);
    match side {
        EnergySide::Forward => Side {
            map: &pair.forward,
            locus: &pair.ind_backward,
            opposite: &pair.ind_forward,
            log_weight: pair.s as f64 * d.ln(),
            form_power: pair.s.saturating_sub(1),
        },
        EnergySide::Backward => Side {
            map: &pair.backward,
            locus: &pair.ind_forward,
            opposite: &pair.ind_backward,
            log_weight: (k - pair.s) as f64 * delta.ln(),
            form_power: (k - pair.s).saturating_sub(1),
        },
    }
}

/// Chordal distance from x to a point list or a linear span.
pub fn locus_distance(x: &CProjPoint, locus: &ComplexLocus) -> f64 {
    match locus.kind {
        LocusKind::Points => locus
            .generators
            .iter()
            .map(|g| fs_distance(x, g))
            .fold(f64::INFINITY, f64::min),
        LocusKind::Linear => {
            let basis = orthonormalize(locus.generators.iter().map(|g| g.coords().to_vec()));
            let proj: f64 = basis.iter().map(|e| inner(e, x.coords()).norm_sqr()).sum();
            (1.0 - proj).max(0.0).sqrt()
        }
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn orthonormalize(vs: impl Iterator<Item = Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for mut v in vs {
        for e in &basis {
            let c = inner(e, &v);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= c * ei;
            }
        }
        let n = norm2(&v);
        if n > 1e-12 {
            basis.push(v.into_iter().map(|c| c / n).collect());
        }
    }
    basis
}

/// Partial sums up to index `n_max` of the energy series on one side.
pub fn energy_partial_sum(
    pair: &ComplexPair,
    n_max: usize,
    side: EnergySide,
    method: EnergyMethod,
    opts: &EnergyOptions,
) -> Result<EnergySeries> {
    let sd = side_data(pair, side);
    let dim = sd.locus.dim;
    match method {
        EnergyMethod::PointOrbitExact | EnergyMethod::DistanceProxy if dim != 0 => {
            return Err(Error::WrongDimension(format!(
                "{} needs a 0-dimensional locus, got dimension {dim}",
                method.as_str()
            )))
        }
        EnergyMethod::DistanceProxy if pair.k() != 2 => {
            return Err(Error::WrongDimension("distance-proxy is defined for k = 2".into()))
        }
        EnergyMethod::MonteCarlo if sd.locus.kind != LocusKind::Linear || dim == 0 => {
            return Err(Error::WrongDimension(
                "monte-carlo needs a positive-dimensional linear locus".into(),
            ))
        }
        EnergyMethod::MonteCarlo if dim != sd.form_power => {
            return Err(Error::WrongDimension(format!(
                "locus dimension {dim} does not match form degree {}",
                sd.form_power
            )))
        }
        _ => {}
    }
    let weight = |n: usize| (-(n as f64) * sd.log_weight).exp();
    match method {
        EnergyMethod::PointOrbitExact | EnergyMethod::DistanceProxy => {
            let mut terms = vec![0.0; n_max + 1];
            for x0 in &sd.locus.generators {
                let mut x = x0.clone();
                for (n, term) in terms.iter_mut().enumerate() {
                    let v = if method == EnergyMethod::PointOrbitExact {
                        phi_at(sd.map, x.coords())
                            .map_err(|_| Error::NearIndeterminate { step: n })?
                            .0
                    } else {
                        let dist = locus_distance(&x, sd.opposite);
                        if dist < 1e-300 {
                            return Err(Error::NearIndeterminate { step: n });
                        }
                        dist.ln()
                    };
                    *term += weight(n) * v;
                    if n < n_max {
                        x = sd.map.apply(&x).map_err(|_| Error::NearIndeterminate { step: n })?;
                    }
                }
            }
            Ok(EnergySeries::from_terms(pair.s, side, method, terms))
        }
        EnergyMethod::MonteCarlo => {
            let mut terms = Vec::with_capacity(n_max + 1);
            let mut skipped = 0;
            for n in 0..=n_max {
                let (avg, sk) = mc_pullback_average(
                    sd.map,
                    &sd.locus.generators,
                    n,
                    opts.samples,
                    opts.seed.wrapping_add(n as u64),
                    |p| phi_at(sd.map, p).ok().map(|v| v.0),
                )?;
                skipped += sk;
                terms.push(weight(n) * avg);
            }
            let mut series = EnergySeries::from_terms(pair.s, side, method, terms);
            series.samples = Some(opts.samples);
            series.seed = Some(opts.seed);
            series.skipped_samples = skipped;
            Ok(series)
        }
    }
}

/// Monte Carlo estimate of ∫_X (g∘f^n)·(f^{n+1})^*(ω^m) over the linear
/// subspace X spanned by `generators` (dimension m), with ω normalized to
/// mass 1. Samples are Fubini–Study uniform on X; the form density is the
/// Gram determinant of the projected Jacobian of the lift of f^{n+1} along
/// an orthonormal tangent frame. Returns the estimate and the number of
/// skipped samples (g undefined or the orbit numerically indeterminate).
pub fn mc_pullback_average<G>(
    f: &ComplexMap,
    generators: &[CProjPoint],
    n: usize,
    samples: usize,
    seed: u64,
    g: G,
) -> Result<(f64, usize)>
where
    G: Fn(&[Complex64]) -> Option<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let m = generators.len() - 1;
    const BATCH: usize = 64;
    let batches = samples.div_ceil(BATCH);
    let results: Vec<Vec<Option<f64>>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(samples - b * BATCH);
            (0..count)
                .map(|_| {
                    let a: Vec<Complex64> = (0..=m)
                        .map(|_| {
                            let re: f64 = StandardNormal.sample(&mut rng);
                            let im: f64 = StandardNormal.sample(&mut rng);
                            Complex64::new(re, im)
                        })
                        .collect();
                    mc_sample(f, generators, n, &a, &g)
                })
                .collect()
        })
        .collect();
    let flat: Vec<Option<f64>> = results.into_iter().flatten().collect();
    let good: Vec<f64> = flat.iter().filter_map(|v| *v).collect();
    let skipped = flat.len() - good.len();
    if good.is_empty() {
        return Err(Error::NearIndeterminate { step: n });
    }
    Ok((compensated_sum(good.iter().copied()) / flat.len() as f64, skipped))
}

fn mc_sample<G>(
    f: &ComplexMap,
    generators: &[CProjPoint],
    n: usize,
    a: &[Complex64],
    g: &G,
) -> Option<f64>
where
    G: Fn(&[Complex64]) -> Option<f64>,
{
    let na = norm2(a);
    let a: Vec<Complex64> = a.iter().map(|c| c / na).collect();
    // orthonormal frame of a^⊥ in parameter space
    let mut frame_src = vec![a.clone()];
    for j in 0..a.len() {
        let mut e = vec![Complex64::zero(); a.len()];
        e[j] = Complex64::new(1.0, 0.0);
        frame_src.push(e);
    }
    let frame: Vec<Vec<Complex64>> = orthonormalize(frame_src.into_iter()).into_iter().skip(1).collect();
    let embed = |c: &[Complex64]| -> Vec<Complex64> {
        let len = generators[0].len();
        (0..len)
            .map(|i| c.iter().zip(generators).map(|(cj, gj)| cj * gj.coords()[i]).sum())
            .collect()
    };
    let mut p = embed(&a);
    let mut tangents: Vec<Vec<Complex64>> = frame.iter().map(|v| embed(v)).collect();
    let mut value = None;
    for step in 0..=n {
        if step == n {
            value = Some(g(&p)?);
        }
        let np = norm2(&p);
        let mut q = Vec::new();
        let mut new_t = Vec::with_capacity(tangents.len());
        for t in &tangents {
            let (fq, ft) = f.eval_jvp(&p, t);
            q = fq;
            new_t.push(ft);
        }
        if tangents.is_empty() {
            q = f.eval(&p);
        }
        let nq = norm2(&q);
        if !(nq >= super::NEAR_ZERO * np.powi(f.degree() as i32)) {
            return None;
        }
        p = q.into_iter().map(|c| c / nq).collect();
        tangents = new_t
            .into_iter()
            .map(|t| t.into_iter().map(|c| c / nq).collect())
            .collect();
    }
    // p is unit; project tangents off p and take the Gram determinant
    let w: Vec<Vec<Complex64>> = tangents
        .into_iter()
        .map(|t| {
            let c = inner(&p, &t);
            t.iter().zip(&p).map(|(ti, pi)| ti - c * pi).collect()
        })
        .collect();
    let gram: Vec<Vec<Complex64>> = w.iter().map(|wi| w.iter().map(|wj| inner(wi, wj)).collect()).collect();
    Some(value? * hermitian_det(gram))
}

fn hermitian_det(mut m: Vec<Vec<Complex64>>) -> f64 {
    let n = m.len();
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm())).unwrap();
        if m[piv][c].norm() == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let factor = m[r][c] / m[c][c];
            for k in c..n {
                let v = m[c][k];
                m[r][k] -= factor * v;
            }
        }
    }
    det.re.max(0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityEvidence {
    pub checked_to: usize,
    /// min over n ≤ N of d(f^n(I_{f⁻¹}), I_f).
    pub min_forward_distance: f64,
    /// min over n ≤ N of d(f^−n(I_f), I_{f⁻¹}).
    pub min_backward_distance: f64,
    pub tolerance: f64,
    pub passes: bool,
}

/// Numerical orbit separation of the two point loci up to n steps: the
/// double-precision counterpart of the exact orbit check.
pub fn finite_evidence_stability(pair: &ComplexPair, n: usize, tolerance: f64) -> Result<StabilityEvidence> {
    let run = |side: EnergySide| -> Result<f64> {
        let sd = side_data(pair, side);
        if sd.locus.kind != LocusKind::Points {
            return Err(Error::WrongDimension("orbit separation needs point loci".into()));
        }
        let mut best = f64::INFINITY;
        for x0 in &sd.locus.generators {
            let mut x = x0.clone();
            for step in 0..=n {
                best = best.min(locus_distance(&x, sd.opposite));
                if step < n {
                    match sd.map.apply(&x) {
                        Ok(y) => x = y,
                        Err(_) => return Ok(0.0),
                    }
                }
            }
        }
        Ok(best)
    };
    let fwd = run(EnergySide::Forward)?;
    let bwd = run(EnergySide::Backward)?;
    Ok(StabilityEvidence {
        checked_to: n,
        min_forward_distance: fwd,
        min_backward_distance: bwd,
        tolerance,
        passes: fwd > tolerance && bwd > tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::henon;
    use crate::projcore::{BirationalPair, HomogeneousMap, LocusDescription, RatProjPoint};
    use num_rational::BigRational;

    fn pure() -> ComplexPair {
        ComplexPair::from_exact(&henon::henon_pair_int(1, 1).unwrap())
    }

    fn rotated() -> ComplexPair {
        let one = BigRational::from_integer(1.into());
        let rot = henon::rational_rotation(3, 0, 2, 10, 1);
        ComplexPair::from_exact(&henon::linear_after_henon(&one, &one, &rot).unwrap())
    }

    #[test]
    fn pure_henon_series_vanish() {
        let p = pure();
        for side in [EnergySide::Forward, EnergySide::Backward] {
            for method in [EnergyMethod::PointOrbitExact, EnergyMethod::DistanceProxy] {
                let s = energy_partial_sum(&p, 20, side, method, &EnergyOptions::default()).unwrap();
                assert!(s.terms.iter().all(|&t| t == 0.0), "{side:?} {method:?}");
                assert_eq!(s.partial_sums.len(), 21);
                assert_eq!(s.decay_fit, 0.0);
            }
        }
    }

    #[test]
    fn rotated_series_decays() {
        let p = rotated();
        let ev = finite_evidence_stability(&p, 20, 1e-8).unwrap();
        assert!(ev.passes, "{ev:?}");
        for side in [EnergySide::Forward, EnergySide::Backward] {
            let s = energy_partial_sum(&p, 20, side, EnergyMethod::PointOrbitExact, &Default::default())
                .unwrap();
            assert!(s.terms.iter().any(|&t| t != 0.0));
            assert!(s.decay_fit <= 0.5 + 0.1, "{side:?} {}", s.decay_fit);
            for (n, t) in s.terms.iter().enumerate().skip(1) {
                assert!(t.abs() <= s.terms[0].abs() * (n as f64 + 1.0) * 0.5f64.powi(n as i32), "{n} {t}");
            }
            for w in s.partial_sums.windows(2).zip(&s.terms[1..]) {
                assert!((w.0[1] - w.0[0] - w.1).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn method_dimension_checks() {
        let p = pure();
        let e = energy_partial_sum(&p, 3, EnergySide::Forward, EnergyMethod::MonteCarlo, &Default::default());
        assert!(matches!(e, Err(Error::WrongDimension(_))));
        let mut q = p.clone();
        q.ind_backward.dim = 1;
        let e = energy_partial_sum(&q, 3, EnergySide::Forward, EnergyMethod::PointOrbitExact, &Default::default());
        assert!(matches!(e, Err(Error::WrongDimension(_))));
    }

    /// [x² : y² : z² : t²] on ℙ³ with the line {z = t = 0} as locus.
    fn power_pair() -> ComplexPair {
        let sq = HomogeneousMap::from_i64_terms(
            2,
            &[
                &[(1, &[2, 0, 0, 0])],
                &[(1, &[0, 2, 0, 0])],
                &[(1, &[0, 0, 2, 0])],
                &[(1, &[0, 0, 0, 2])],
            ],
        )
        .unwrap();
        let line = LocusDescription::linear(
            vec![
                RatProjPoint::from_i64(&[1, 0, 0, 0]).unwrap(),
                RatProjPoint::from_i64(&[0, 1, 0, 0]).unwrap(),
            ],
            1,
        )
        .unwrap();
        let pt = LocusDescription::points(vec![RatProjPoint::from_i64(&[1, 1, 1, 1]).unwrap()]).unwrap();
        let exact = BirationalPair {
            forward: sq.clone(),
            backward: sq,
            s: 2,
            ind_forward: pt,
            ind_backward: line,
        };
        ComplexPair::from_exact(&exact)
    }

    #[test]
    fn gram_weight_integrates_to_degree() {
        // the pullback of ω by the squaring map of a line has mass 2^(n+1)
        let p = power_pair();
        for n in 0..3 {
            let (avg, skipped) =
                mc_pullback_average(&p.forward, &p.ind_backward.generators, n, 20_000, 3, |_| Some(1.0))
                    .unwrap();
            assert_eq!(skipped, 0);
            let expect = 2f64.powi(n as i32 + 1);
            assert!((avg - expect).abs() < 0.05 * expect, "n={n}: {avg}");
        }
    }

    #[test]
    fn monte_carlo_series_is_flagged_and_reproducible() {
        let p = power_pair();
        let opts = EnergyOptions { samples: 500, seed: 9 };
        let a = energy_partial_sum(&p, 4, EnergySide::Forward, EnergyMethod::MonteCarlo, &opts).unwrap();
        let b = energy_partial_sum(&p, 4, EnergySide::Forward, EnergyMethod::MonteCarlo, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.approximate);
        assert_eq!(a.samples, Some(500));
        // φ vanishes identically for a power map with sup norms
        assert!(a.terms.iter().all(|t| t.abs() < 1e-12));
    }

    #[test]
    fn locus_distance_linear() {
        let line = ComplexLocus {
            kind: LocusKind::Linear,
            generators: vec![
                CProjPoint::from_real(&[1.0, 0.0, 0.0]).unwrap(),
                CProjPoint::from_real(&[1.0, 1.0, 0.0]).unwrap(),
            ],
            dim: 1,
        };
        let x = CProjPoint::from_real(&[0.0, 1.0, 1.0]).unwrap();
        assert!((locus_distance(&x, &line) - 0.5f64.sqrt()).abs() < 1e-14);
        let on = CProjPoint::from_real(&[3.0, -2.0, 0.0]).unwrap();
        assert!(locus_distance(&on, &line) < 1e-14);
    }

    #[test]
    fn csv_layout() {
        let s = energy_partial_sum(&pure(), 2, EnergySide::Forward, EnergyMethod::PointOrbitExact, &Default::default())
            .unwrap();
        assert_eq!(s.to_csv().lines().next(), Some("n,term,partial_sum"));
        assert_eq!(s.to_csv().lines().count(), 4);
    }
}
