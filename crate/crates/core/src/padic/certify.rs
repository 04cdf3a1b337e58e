use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orbit::{
    dominance, eval_padic, exact_prefix, int_valuations, padic_tail, OrbitOptions,
};
use super::{check_prime, val_lt, valuation_rat, PadicContext};
use crate::error::{Error, Result};
use crate::henon;
use crate::linalg::{self, RatMatrix};
use crate::mapfile::HenonParams;
use crate::projcore::{compose, Direction, HomogeneousMap, Poly, RatProjPoint};

pub const DEFAULT_SANITY_N: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Certified,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProofKind {
    /// The induction on the dominance invariant, valid for every n.
    Inductive,
    FiniteEvidence,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    /// Witness valuations (`null` = +∞).
    pub valuations: Vec<Option<i64>>,
}

/// Step at which an orbit of one indeterminacy locus lands on the other.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refutation {
    pub direction: Direction,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub verdict: Verdict,
    pub proof_kind: ProofKind,
    pub prime: u64,
    pub hypotheses: Vec<Hypothesis>,
    pub invariant_checked_to: usize,
    /// Normalized valuations of the backward orbit of I_g, steps 0..=N.
    pub orbit_valuations: Vec<Vec<Option<i64>>>,
    /// Dominance of the middle coordinate along that orbit.
    pub dominance: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refutation: Option<Refutation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Parts of g = f∘A needed for certification: g⁻¹ = A⁻¹∘f⁻¹ and the start
/// point A⁻¹(I_f) = [b₁:b₂:b₃].
fn backward_map(a: &BigRational, b: &BigRational, a_inverse: &RatMatrix) -> Result<(HomogeneousMap, RatProjPoint)> {
    if a_inverse.len() != 3 || a_inverse.iter().any(|r| r.len() != 3) {
        return Err(Error::InvalidArgument("A⁻¹ must be 3×3".into()));
    }
    let base = henon::henon_pair(a, b)?;
    let g_inv = compose(&HomogeneousMap::linear(a_inverse)?, &base.backward)?;
    let column: Vec<BigRational> = a_inverse.iter().map(|r| r[1].clone()).collect();
    let start = RatProjPoint::normalize(&column)?;
    Ok((g_inv, start))
}

fn hypotheses(a: &BigRational, b: &BigRational, a_inverse: &RatMatrix, p: u64) -> Vec<Hypothesis> {
    let va = valuation_rat(a, p);
    let vb = valuation_rat(b, p);
    let entries: Vec<Option<i64>> = a_inverse.iter().flatten().map(|q| valuation_rat(q, p)).collect();
    let vb2 = entries[4];
    let dominant = entries
        .iter()
        .enumerate()
        .all(|(i, &v)| i == 4 || val_lt(vb2, v));
    vec![
        Hypothesis {
            name: "|a|_p = 1".into(),
            holds: va == Some(0),
            valuations: vec![va],
        },
        Hypothesis {
            name: "|b|_p = 1".into(),
            holds: vb == Some(0),
            valuations: vec![vb],
        },
        Hypothesis {
            name: "|b2|_p strictly dominates the other entries of A^-1".into(),
            holds: dominant,
            valuations: entries,
        },
    ]
}

/// Outcome of iterating one orbit as evidence of separation.
enum Evidence {
    /// The orbit is well defined for all requested evaluations.
    Separated(Vec<Vec<Option<i64>>>),
    /// The orbit meets the indeterminacy locus of the iterated map.
    Meets(usize),
    Undecided(usize, Vec<Vec<Option<i64>>>),
}

/// Valuations of steps 0..=n, requiring n + 1 well-defined evaluations
/// (the last one shows step n itself avoids the indeterminacy locus).
fn orbit_evidence(f: &HomogeneousMap, start: &RatProjPoint, n: usize, p: u64, opts: &OrbitOptions) -> Evidence {
    let exact = match exact_prefix(f, start, n + 1, opts.exact_bit_budget) {
        Ok(v) => v,
        Err(Error::IndeterminateEvaluation { step }) => return Evidence::Meets(step),
        Err(_) => return Evidence::Undecided(0, vec![]),
    };
    let mut vals: Vec<_> = exact.iter().map(|x| int_valuations(x, p)).collect();
    if exact.len() < n + 2 {
        match padic_tail(f, exact.last().unwrap(), exact.len() - 1, n + 2 - exact.len(), p, opts) {
            Ok((_, tail, _)) => vals.extend(tail),
            Err(Error::IndeterminateEvaluation { step }) => return Evidence::Meets(step),
            Err(Error::PrecisionExhausted { step }) => {
                return Evidence::Undecided(step, vals);
            }
            Err(_) => return Evidence::Undecided(exact.len() - 1, vals),
        }
    }
    vals.truncate(n + 1);
    Evidence::Separated(vals)
}

/// Certify algebraic stability of g = f∘A for the quadratic Hénon map f
/// with parameters (a, b), given the matrix of A⁻¹.
///
/// When |a|_p = |b|_p = 1 and the middle entry b₂ of A⁻¹ strictly dominates
/// all other entries p-adically, the dominance |y_n|_p > max(|x_n|_p, |t_n|_p)
/// propagates along the backward orbit of I_g = [b₁:b₂:b₃] by induction,
/// so that orbit never reaches I_{g⁻¹} = [1:0:0]; the verdict is then
/// `certified` with an inductive proof, and the invariant is additionally
/// checked numerically to `sanity_n`. Otherwise both orbits are iterated to
/// `sanity_n` as finite evidence, giving `refuted` on an exact hit and
/// `inconclusive` otherwise.
pub fn certify_stability_henon_a(
    a: &BigRational,
    b: &BigRational,
    a_inverse: &RatMatrix,
    p: u64,
    sanity_n: usize,
) -> Result<StabilityCertificate> {
    check_prime(p)?;
    if a_inverse.len() != 3 || a_inverse.iter().any(|r| r.len() != 3) {
        return Err(Error::InvalidArgument("A⁻¹ must be 3×3".into()));
    }
    if linalg::determinant(a_inverse).is_zero() {
        return Err(Error::SingularMatrix);
    }
    let hyps = hypotheses(a, b, a_inverse, p);
    let all_hold = hyps.iter().all(|h| h.holds);
    let opts = OrbitOptions::default();
    let pair = henon::henon_after_linear(a, b, a_inverse)?;
    let (g_inv, start) = backward_map(a, b, a_inverse)?;
    debug_assert_eq!(pair.ind_forward.generators()[0], start);

    let mut notes = Vec::new();
    let mut refutation = None;
    let backward = orbit_evidence(&g_inv, &start, sanity_n, p, &opts);
    let orbit_vals = match &backward {
        Evidence::Separated(v) | Evidence::Undecided(_, v) => v.clone(),
        Evidence::Meets(step) => {
            refutation = Some(Refutation {
                direction: Direction::Backward,
                step: *step,
            });
            vec![]
        }
    };
    let dom: Vec<bool> = orbit_vals.iter().map(|v| dominance(v)).collect();

    let (verdict, proof_kind) = if all_hold {
        if refutation.is_some() || !dom.iter().all(|&d| d) || dom.len() != sanity_n + 1 {
            notes.push("hypotheses hold but the finite dominance check disagrees".into());
            (Verdict::Inconclusive, ProofKind::FiniteEvidence)
        } else {
            (Verdict::Certified, ProofKind::Inductive)
        }
    } else {
        if refutation.is_none() {
            let i_g_inv = &pair.ind_backward.generators()[0];
            match orbit_evidence(&pair.forward, i_g_inv, sanity_n, p, &opts) {
                Evidence::Meets(step) => {
                    refutation = Some(Refutation {
                        direction: Direction::Forward,
                        step,
                    })
                }
                Evidence::Undecided(step, _) => {
                    notes.push(format!("forward orbit of I_g^-1 undecided at step {step}"))
                }
                Evidence::Separated(_) => {}
            }
        }
        if let Evidence::Undecided(step, _) = backward {
            notes.push(format!("backward orbit of I_g undecided at step {step}"));
        }
        if refutation.is_some() {
            (Verdict::Refuted, ProofKind::FiniteEvidence)
        } else {
            notes.push(format!("no orbit collision up to n = {sanity_n}"));
            (Verdict::Inconclusive, ProofKind::FiniteEvidence)
        }
    };
    Ok(StabilityCertificate {
        verdict,
        proof_kind,
        prime: p,
        hypotheses: hyps,
        invariant_checked_to: sanity_n,
        orbit_valuations: orbit_vals,
        dominance: dom,
        refutation,
        notes,
    })
}

/// Certify independent configurations in parallel; each entry needs a prime.
pub fn certify_sweep(configs: &[HenonParams], sanity_n: usize) -> Vec<Result<StabilityCertificate>> {
    configs
        .par_iter()
        .map(|c| {
            let p = c
                .prime
                .ok_or_else(|| Error::InvalidArgument("configuration without prime".into()))?;
            certify_stability_henon_a(&c.a, &c.b, &c.a_inverse, p, sanity_n)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthStep {
    pub n: usize,
    pub valuations: Vec<Option<i64>>,
    /// |y_n|_p > 2^(n+1) |x_n|_p
    pub y_over_x: bool,
    /// 2^(n+1) |x_n|_p > 4^(n+1) |t_n|_p
    pub x_over_t: bool,
    pub t_nonzero: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Escape {
    /// Smallest n with P(x_n, y_n, t_n) ≠ 0.
    Found { n: usize },
    NotFound { checked_to: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZariskiReport {
    pub prime: u64,
    pub n: usize,
    pub steps: Vec<GrowthStep>,
    pub all_hold: bool,
    pub first_failure: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape: Option<Escape>,
}

/// p^(hi − lo) > 2^(n+1), decided in integers; false when either side is 0
/// in the wrong place.
fn ratio_exceeds(p: u64, lo: Option<i64>, hi: Option<i64>, n: usize) -> bool {
    // |lo-coordinate| / |hi-coordinate| = p^(hi − lo)
    match (lo, hi) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(l), Some(h)) => {
            let e = h - l;
            e >= 0
                && num_traits::pow(BigInt::from(p), e as usize) > num_traits::pow(BigInt::from(2), n + 1)
        }
    }
}

fn growth_step(p: u64, n: usize, v: &[Option<i64>]) -> GrowthStep {
    let (vx, vy, vt) = (v[0], v[1], v[2]);
    let y_over_x = ratio_exceeds(p, vy, vx, n);
    let x_over_t = ratio_exceeds(p, vx, vt, n);
    let t_nonzero = vt.is_some();
    GrowthStep {
        n,
        valuations: v.to_vec(),
        y_over_x,
        x_over_t,
        t_nonzero,
        holds: y_over_x && x_over_t && t_nonzero,
    }
}

/// Check |y_n|_p > 2^(n+1)|x_n|_p > 4^(n+1)|t_n|_p ≠ 0 along the backward
/// orbit [x_n:y_n:t_n] of A⁻¹(I_f) under A⁻¹∘f⁻¹ for n ≤ N, exactly. When a
/// polynomial P is given, also report the first n with P(x_n, y_n, t_n) ≠ 0.
/// Invertibility of A⁻¹ is not required.
pub fn zariski_density_check(
    a: &BigRational,
    b: &BigRational,
    a_inverse: &RatMatrix,
    p: u64,
    n: usize,
    poly: Option<&Poly>,
) -> Result<ZariskiReport> {
    check_prime(p)?;
    let (g_inv, start) = backward_map(a, b, a_inverse)?;
    if let Some(q) = poly {
        if q.nvars() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: q.nvars(),
            });
        }
    }
    let opts = OrbitOptions::default();
    let exact = exact_prefix(&g_inv, &start, n, opts.exact_bit_budget)?;
    let mut vals: Vec<Vec<Option<i64>>> = exact.iter().map(|x| int_valuations(x, p)).collect();
    let mut escape = None;
    if let Some(q) = poly {
        if let Some(i) = exact.iter().position(|x| !q.eval_int(x.coords()).is_zero()) {
            escape = Some(Escape::Found { n: i });
        }
    }
    if exact.len() < n + 1 {
        let (points, tail, rel) =
            padic_tail(&g_inv, exact.last().unwrap(), exact.len() - 1, n + 1 - exact.len(), p, &opts)?;
        if let (Some(q), None) = (poly, &escape) {
            let ctx = PadicContext::new(p, rel);
            let single = HomogeneousMap::new(q.degree().unwrap_or(0), vec![q.clone()]);
            if let Ok(single) = single {
                for (i, x) in points.iter().enumerate() {
                    if eval_padic(&ctx, &single, x)[0].is_known_nonzero() {
                        escape = Some(Escape::Found { n: exact.len() + i });
                        break;
                    }
                }
            }
        }
        vals.extend(tail);
    }
    if poly.is_some() && escape.is_none() {
        escape = Some(Escape::NotFound { checked_to: n });
    }
    let steps: Vec<GrowthStep> = vals.iter().enumerate().map(|(i, v)| growth_step(p, i, v)).collect();
    let first_failure = steps.iter().position(|s| !s.holds);
    Ok(ZariskiReport {
        prime: p,
        n,
        all_hold: first_failure.is_none(),
        first_failure,
        steps,
        escape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapfile::matrix_with;
    use crate::padic::orbit_valuations;
    use crate::projcore::orbit;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn one() -> BigRational {
        q(1, 1)
    }

    /// Invertible A⁻¹ with b₂ = 1/9 dominant at p = 3.
    fn dominant_matrix() -> RatMatrix {
        vec![
            vec![one(), one(), q(0, 1)],
            vec![q(0, 1), q(1, 9), one()],
            vec![one(), q(0, 1), one()],
        ]
    }

    #[test]
    fn certified_when_b2_dominates() {
        let c = certify_stability_henon_a(&one(), &one(), &dominant_matrix(), 3, DEFAULT_SANITY_N).unwrap();
        assert_eq!(c.verdict, Verdict::Certified);
        assert_eq!(c.proof_kind, ProofKind::Inductive);
        assert_eq!(c.orbit_valuations.len(), DEFAULT_SANITY_N + 1);
        assert!(c.dominance.iter().all(|&d| d));
        assert!(c.orbit_valuations.iter().all(|v| v.iter().flatten().min() == Some(&0)));
    }

    #[test]
    fn certified_orbit_dominant_to_one_thousand() {
        let pair = henon::henon_after_linear(&one(), &one(), &dominant_matrix()).unwrap();
        let start = pair.ind_forward.generators()[0].clone();
        let r = orbit_valuations(&pair, &start, 3, 1000, Direction::Backward).unwrap();
        assert_eq!(r.steps.len(), 1001);
        assert!(r.all_dominant());
    }

    #[test]
    fn singular_matrix_rejected() {
        let m = matrix_with(&one(), &[((1, 1), q(1, 9))]);
        assert_eq!(
            certify_stability_henon_a(&one(), &one(), &m, 3, 10),
            Err(Error::SingularMatrix)
        );
        assert_eq!(
            certify_stability_henon_a(&one(), &one(), &matrix_with(&one(), &[]), 3, 10),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn non_dominant_is_inconclusive() {
        let m = vec![
            vec![one(), one(), q(0, 1)],
            vec![q(0, 1), one(), one()],
            vec![one(), q(0, 1), one()],
        ];
        let c = certify_stability_henon_a(&one(), &one(), &m, 3, DEFAULT_SANITY_N).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert_eq!(c.proof_kind, ProofKind::FiniteEvidence);
        assert!(!c.hypotheses[2].holds);
    }

    #[test]
    fn b_not_unit_is_inconclusive() {
        let c = certify_stability_henon_a(&one(), &q(3, 1), &dominant_matrix(), 3, 20).unwrap();
        assert_ne!(c.verdict, Verdict::Certified);
        assert_eq!(c.hypotheses[1].valuations, vec![Some(1)]);
        assert!(!c.hypotheses[1].holds);
    }

    #[test]
    fn exact_collision_is_refuted() {
        // A⁻¹ = identity: g = f, whose backward orbit of I_f = [0:1:0] is
        // f⁻¹[0:1:0] = [0:−1:0], the same point; it never meets [1:0:0].
        // A⁻¹ sending [0:1:0] to [1:0:0] makes I_g = I_{g⁻¹}.
        let m = vec![
            vec![q(0, 1), one(), q(0, 1)],
            vec![one(), q(0, 1), q(0, 1)],
            vec![q(0, 1), q(0, 1), one()],
        ];
        let c = certify_stability_henon_a(&one(), &one(), &m, 3, 10).unwrap();
        assert_eq!(c.verdict, Verdict::Refuted);
        assert_eq!(c.refutation.as_ref().unwrap().step, 0);
    }

    #[test]
    fn scaling_by_unit_preserves_certificate() {
        for s in [q(2, 1), q(-5, 7), q(4, 11)] {
            let m: RatMatrix = dominant_matrix()
                .iter()
                .map(|r| r.iter().map(|x| x * &s).collect())
                .collect();
            let c = certify_stability_henon_a(&one(), &one(), &m, 3, 20).unwrap();
            assert_eq!(c.verdict, Verdict::Certified);
        }
    }

    #[test]
    fn not_prime() {
        assert_eq!(
            certify_stability_henon_a(&one(), &one(), &dominant_matrix(), 9, 10),
            Err(Error::NotPrime(9))
        );
    }

    fn zariski_matrix() -> RatMatrix {
        matrix_with(
            &one(),
            &[((0, 1), q(1, 125)), ((1, 1), q(1, 15625)), ((2, 1), q(1, 5))],
        )
    }

    #[test]
    fn zariski_base_step_and_escape() {
        let y = Poly::variable(3, 1);
        let r = zariski_density_check(&one(), &one(), &zariski_matrix(), 5, 0, Some(&y)).unwrap();
        assert_eq!(r.steps.len(), 1);
        // |y0| = 5^6 > 2·5^3 > 4·5
        assert!(r.steps[0].holds);
        assert_eq!(r.escape, Some(Escape::Found { n: 0 }));
    }

    #[test]
    fn zariski_valuations_match_exact_orbit() {
        let (g_inv, start) = backward_map(&one(), &one(), &zariski_matrix()).unwrap();
        let exact = orbit(&g_inv, &start, 8).unwrap();
        let r = zariski_density_check(&one(), &one(), &zariski_matrix(), 5, 8, None).unwrap();
        for (s, x) in r.steps.iter().zip(&exact) {
            assert_eq!(s.valuations, int_valuations(x, 5));
        }
    }

    #[test]
    fn growth_implies_dominance() {
        let r = zariski_density_check(&one(), &one(), &zariski_matrix(), 5, 8, None).unwrap();
        for s in &r.steps {
            if s.holds {
                assert!(dominance(&s.valuations));
            }
        }
    }

    #[test]
    fn integer_ratio_comparison() {
        // 5^3 = 125 > 2^6 = 64 but 5^3 < 2^7
        assert!(ratio_exceeds(5, Some(0), Some(3), 5));
        assert!(!ratio_exceeds(5, Some(0), Some(3), 6));
        assert!(!ratio_exceeds(5, Some(2), Some(1), 0));
        assert!(ratio_exceeds(5, Some(0), None, 100));
        assert!(!ratio_exceeds(5, None, Some(0), 0));
    }
}
