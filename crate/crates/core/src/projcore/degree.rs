//! Degree diagnostics: the degree of the common factor of the coordinate
//! polynomials (Monte Carlo over random lines, computed modulo 2^61 − 1) and
//! the effective degree sequence deg f, deg f², ...

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::modp;
use super::pair::{BirationalPair, Direction};
use super::poly::{compose_with_budget, HomogeneousMap, DEFAULT_MONOMIAL_BUDGET};
use crate::error::{Error, Result};

/// Integer line parameters are drawn from [−LINE_PARAM_BOUND, LINE_PARAM_BOUND].
pub const LINE_PARAM_BOUND: i64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorDegree {
    /// Minimum gcd degree observed (the generic value).
    pub degree: u32,
    /// Successful (non-degenerate) trials.
    pub trials: usize,
    /// Trials attaining the minimum.
    pub agreement: usize,
}

/// gcd degree of the binary forms F_i(s·u + t·v), or `None` when every
/// restriction vanishes.
fn restricted_gcd_degree(f: &HomogeneousMap, u: &[u64], v: &[u64]) -> Option<u32> {
    let d = f.degree() as usize;
    let n = f.nvars();
    // sample points v + s·u for s = 0..=d
    let samples: Vec<Vec<u64>> = (0..=d as u64)
        .map(|s| (0..n).map(|j| modp::add(v[j], modp::mul(s, u[j]))).collect())
        .collect();
    let mut restrictions = Vec::with_capacity(f.len());
    for poly in f.polys() {
        let coeffs: Vec<(u64, &Vec<u32>)> = poly
            .terms()
            .map(|(e, c)| (modp::from_bigint(c), e))
            .collect();
        let values: Vec<u64> = samples
            .iter()
            .map(|x| {
                let powers: Vec<Vec<u64>> = x
                    .iter()
                    .map(|&xi| {
                        let mut pw = Vec::with_capacity(d + 1);
                        pw.push(1u64);
                        for k in 1..=d {
                            pw.push(modp::mul(pw[k - 1], xi));
                        }
                        pw
                    })
                    .collect();
                coeffs.iter().fold(0u64, |acc, (c, e)| {
                    let t = e
                        .iter()
                        .enumerate()
                        .fold(*c, |t, (j, &ej)| modp::mul(t, powers[j][ej as usize]));
                    modp::add(acc, t)
                })
            })
            .collect();
        let p = modp::interpolate_at_naturals(&values);
        if !p.is_empty() {
            restrictions.push(p);
        }
    }
    if restrictions.is_empty() {
        return None;
    }
    // multiplicity of the point at s = ∞ (t = 0) of each binary form
    let at_infinity = restrictions
        .iter()
        .map(|p| d - modp::degree(p).unwrap())
        .min()
        .unwrap();
    let g = restrictions
        .iter()
        .skip(1)
        .fold(restrictions[0].clone(), |acc, p| modp::gcd(&acc, p));
    Some((modp::degree(&g).unwrap() + at_infinity) as u32)
}

/// Degree of the gcd of the coordinate polynomials of `f`, estimated by
/// restricting to `trials` random projective lines. If the trials disagree,
/// more lines are drawn (up to 10× trials in total); the minimum observed
/// value is returned.
pub fn common_factor_degree(f: &HomogeneousMap, trials: usize, seed: u64) -> Result<FactorDegree> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = f.nvars();
    let max_attempts = 10 * trials;
    let mut observed: Vec<u32> = Vec::new();
    let mut attempts = 0;
    let mut target = trials;
    loop {
        while observed.len() < target && attempts < max_attempts {
            attempts += 1;
            let mut draw = || -> Vec<u64> {
                (0..n)
                    .map(|_| modp::from_i64(rng.random_range(-LINE_PARAM_BOUND..=LINE_PARAM_BOUND)))
                    .collect()
            };
            let u = draw();
            let v = draw();
            if let Some(g) = restricted_gcd_degree(f, &u, &v) {
                observed.push(g);
            }
        }
        if observed.is_empty() {
            return Err(Error::DegenerateRestriction { attempts });
        }
        let min = *observed.iter().min().unwrap();
        let agreement = observed.iter().filter(|&&g| g == min).count();
        if agreement == observed.len() || attempts >= max_attempts {
            return Ok(FactorDegree {
                degree: min,
                trials: observed.len(),
                agreement,
            });
        }
        target = (2 * target).min(max_attempts);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeOptions {
    pub trials: usize,
    pub seed: u64,
    pub monomial_budget: usize,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        DegreeOptions {
            trials: 5,
            seed: 0,
            monomial_budget: DEFAULT_MONOMIAL_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeStep {
    pub n: usize,
    /// Degree of the composed lift after monomial stripping.
    pub formal_degree: u32,
    pub common_factor: FactorDegree,
    pub degree: u32,
    pub monomials: usize,
}

/// Effective degrees [deg f, ..., deg f^N]. Each iterate is F∘(previous)
/// with monomial common factors stripped; any remaining common factor is
/// measured by [`common_factor_degree`] and subtracted.
pub fn degree_sequence(
    pair: &BirationalPair,
    direction: Direction,
    n: usize,
    opts: &DegreeOptions,
) -> Result<Vec<DegreeStep>> {
    if n == 0 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let f = pair.map(direction);
    let mut steps = Vec::with_capacity(n);
    let mut current = f.clone();
    for step in 1..=n {
        if step > 1 {
            current = compose_with_budget(f, &current, opts.monomial_budget)?;
            current = current.strip_monomial_factor().0;
        }
        let factor = common_factor_degree(&current, opts.trials, opts.seed.wrapping_add(step as u64))?;
        steps.push(DegreeStep {
            n: step,
            formal_degree: current.degree(),
            degree: current.degree() - factor.degree,
            common_factor: factor,
            monomials: current.num_monomials(),
        });
    }
    Ok(steps)
}

pub fn degrees(pair: &BirationalPair, direction: Direction, n: usize) -> Result<Vec<u32>> {
    Ok(degree_sequence(pair, direction, n, &DegreeOptions::default())?
        .into_iter()
        .map(|s| s.degree)
        .collect())
}
