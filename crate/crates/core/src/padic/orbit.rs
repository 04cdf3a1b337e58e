use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::number::{Padic, PadicContext};
use super::{check_prime, val_lt, valuation_int};
use crate::error::{Error, Result};
use crate::projcore::{BirationalPair, Direction, HomogeneousMap, RatProjPoint};

/// How orbit valuations are computed: exact rational iteration while the
/// coordinates stay below `exact_bit_budget` bits, then fixed-precision
/// p-adic iteration starting at `rel_precision` digits and doubling on
/// ambiguity up to `max_rel_precision`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitOptions {
    pub exact_bit_budget: u64,
    pub rel_precision: u32,
    pub max_rel_precision: u32,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            exact_bit_budget: 4096,
            rel_precision: 64,
            max_rel_precision: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationOrbitRecord {
    pub prime: u64,
    pub direction: Direction,
    /// Normalized valuation vector per step (minimum entry 0, `None` = +∞).
    pub steps: Vec<Vec<Option<i64>>>,
    /// v_p(y_n) < min(v_p(x_n), v_p(t_n)): coordinate 1 strictly dominates.
    pub dominance: Vec<bool>,
    /// Steps computed with exact rational coordinates.
    pub exact_steps: usize,
    /// Relative p-adic precision used for the remaining steps.
    pub precision: u32,
}

impl ValuationOrbitRecord {
    pub fn all_dominant(&self) -> bool {
        self.dominance.iter().all(|&d| d)
    }
}

pub(crate) fn dominance(v: &[Option<i64>]) -> bool {
    v.len() > 1
        && v.iter()
            .enumerate()
            .all(|(i, &vi)| i == 1 || val_lt(v[1], vi))
}

pub(crate) fn int_valuations(x: &RatProjPoint, p: u64) -> Vec<Option<i64>> {
    x.coords()
        .iter()
        .map(|c| valuation_int(c, p).map(|v| v as i64))
        .collect()
}

pub(crate) fn eval_padic(ctx: &PadicContext, f: &HomogeneousMap, x: &[Padic]) -> Vec<Padic> {
    let one = ctx.from_integer(&BigInt::from(1));
    f.polys()
        .iter()
        .map(|p| {
            p.eval_with(
                x,
                &one,
                |c| ctx.from_integer(c),
                |a, b| ctx.mul(a, b),
                |a, b| ctx.add(a, b),
                ctx.exact_zero(),
            )
        })
        .collect()
}

/// Outcome of normalizing a p-adic projective vector.
pub(crate) enum Normalized {
    Point(Vec<Padic>, Vec<Option<i64>>),
    /// Every coordinate is exactly zero.
    Indeterminate,
    /// Some valuation is not determined at this precision.
    Ambiguous,
}

pub(crate) fn normalize(ctx: &PadicContext, v: Vec<Padic>) -> Normalized {
    let mut vals = Vec::with_capacity(v.len());
    for c in &v {
        match c.valuation() {
            Some(x) => vals.push(x),
            None => return Normalized::Ambiguous,
        }
    }
    let Some(m) = vals.iter().flatten().min().copied() else {
        return Normalized::Indeterminate;
    };
    let out = v.iter().map(|c| ctx.shift(c, m)).collect();
    Normalized::Point(out, vals.iter().map(|x| x.map(|y| y - m)).collect())
}

/// Exact rational orbit while the coordinates fit the bit budget.
pub(crate) fn exact_prefix(
    f: &HomogeneousMap,
    start: &RatProjPoint,
    n: usize,
    bit_budget: u64,
) -> Result<Vec<RatProjPoint>> {
    let mut out = vec![start.clone()];
    while out.len() <= n && out.last().unwrap().bits() <= bit_budget {
        let step = out.len() - 1;
        let next = f
            .evaluate(out.last().unwrap())
            .map_err(|_| Error::IndeterminateEvaluation { step })?;
        out.push(next);
    }
    Ok(out)
}

/// p-adic continuation of an orbit from `start` (which is step `offset`)
/// for `count` further steps.
pub(crate) fn padic_tail(
    f: &HomogeneousMap,
    start: &RatProjPoint,
    offset: usize,
    count: usize,
    p: u64,
    opts: &OrbitOptions,
) -> Result<(Vec<Vec<Padic>>, Vec<Vec<Option<i64>>>, u32)> {
    let mut rel = opts.rel_precision.max(1);
    'precision: loop {
        let ctx = PadicContext::new(p, rel);
        let mut cur: Vec<Padic> = start.coords().iter().map(|c| ctx.from_integer(c)).collect();
        let mut points = Vec::with_capacity(count);
        let mut vals = Vec::with_capacity(count);
        for i in 0..count {
            let step = offset + i;
            match normalize(&ctx, eval_padic(&ctx, f, &cur)) {
                Normalized::Point(next, v) => {
                    points.push(next.clone());
                    vals.push(v);
                    cur = next;
                }
                Normalized::Indeterminate => return Err(Error::IndeterminateEvaluation { step }),
                Normalized::Ambiguous => {
                    if rel >= opts.max_rel_precision {
                        return Err(Error::PrecisionExhausted { step });
                    }
                    rel = (2 * rel).min(opts.max_rel_precision);
                    continue 'precision;
                }
            }
        }
        return Ok((points, vals, rel));
    }
}

/// Per-step normalized valuations of the orbit of `start` under the map of
/// `direction`, for steps 0..=N.
pub fn orbit_valuations(
    pair: &BirationalPair,
    start: &RatProjPoint,
    p: u64,
    n: usize,
    direction: Direction,
) -> Result<ValuationOrbitRecord> {
    orbit_valuations_with(pair.map(direction), direction, start, p, n, &OrbitOptions::default())
}

pub fn orbit_valuations_with(
    f: &HomogeneousMap,
    direction: Direction,
    start: &RatProjPoint,
    p: u64,
    n: usize,
    opts: &OrbitOptions,
) -> Result<ValuationOrbitRecord> {
    check_prime(p)?;
    if start.len() != f.nvars() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars(),
            got: start.len(),
        });
    }
    let exact = exact_prefix(f, start, n, opts.exact_bit_budget)?;
    let mut steps: Vec<Vec<Option<i64>>> = exact.iter().map(|x| int_valuations(x, p)).collect();
    let exact_steps = exact.len();
    let mut precision = 0;
    if exact_steps < n + 1 {
        let (_, vals, rel) = padic_tail(f, exact.last().unwrap(), exact_steps - 1, n + 1 - exact_steps, p, opts)?;
        steps.extend(vals);
        precision = rel;
    }
    let dominance = steps.iter().map(|v| dominance(v)).collect();
    Ok(ValuationOrbitRecord {
        prime: p,
        direction,
        steps,
        dominance,
        exact_steps,
        precision,
    })
}
