//! JSON ingestion for map specifications and Hénon configurations.
//!
//! Coefficients and coordinates are decimal strings so that arbitrary
//! precision values round-trip bit-exactly. Complex coefficients (used only
//! for Green-function runs) are pairs `["re", "im"]`.

use std::path::Path;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RatMatrix;
use crate::projcore::{BirationalPair, HomogeneousMap, LocusDescription, LocusKind, Poly, RatProjPoint};

/// Parse an integer, a fraction "p/q" or a finite decimal "−1.25" exactly.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let t = text.trim();
    let bad = || Error::InvalidMap(format!("not a rational number: {t:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::InvalidMap(format!("zero denominator in {t:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let mut n: BigInt = digits.parse().map_err(|_| bad())?;
        if negative {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

pub fn parse_integer(text: &str) -> Result<BigInt> {
    text.trim()
        .parse()
        .map_err(|_| Error::InvalidMap(format!("not an integer: {text:?}")))
}

/// A coefficient: an integer string, or a pair of decimal strings (re, im).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Integer(String),
    Complex([String; 2]),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub c: Coefficient,
    pub e: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocusSpec {
    pub kind: LocusKind,
    pub generators: Vec<Vec<String>>,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub k: usize,
    pub degree_forward: u32,
    pub degree_backward: u32,
    pub s: usize,
    pub forward: Vec<Vec<TermSpec>>,
    pub backward: Vec<Vec<TermSpec>>,
    pub ind_forward: LocusSpec,
    pub ind_backward: LocusSpec,
}

/// Complex lift as coefficient/exponent lists per coordinate.
pub type ComplexTerms = Vec<Vec<(Complex64, Vec<u32>)>>;

/// Deserialize JSON text, reporting the failing field path and the
/// line/column of the error.
pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::InvalidMap(format!(
            "line {} column {}, field '{}': {}",
            inner.line(),
            inner.column(),
            path,
            inner
        ))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidMap(format!("{}: {e}", path.display())))?;
    from_json_str(&text).map_err(|e| match e {
        Error::InvalidMap(m) => Error::InvalidMap(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn parse_float(text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidMap(format!("not a finite decimal: {text:?}")))
}

fn exponent_check(field: &str, coord: usize, e: &[u32], nvars: usize) -> Result<()> {
    if e.len() != nvars {
        return Err(Error::InvalidMap(format!(
            "{field}[{coord}]: exponent vector of length {} for {nvars} variables",
            e.len()
        )));
    }
    Ok(())
}

fn integer_lift(field: &str, polys: &[Vec<TermSpec>], nvars: usize, degree: u32) -> Result<HomogeneousMap> {
    if polys.len() != nvars {
        return Err(Error::InvalidMap(format!(
            "{field}: expected {nvars} coordinate polynomials, got {}",
            polys.len()
        )));
    }
    let mut out = Vec::with_capacity(nvars);
    for (i, terms) in polys.iter().enumerate() {
        let mut parsed = Vec::with_capacity(terms.len());
        for t in terms {
            exponent_check(field, i, &t.e, nvars)?;
            let c = match &t.c {
                Coefficient::Integer(s) => parse_integer(s)
                    .map_err(|e| Error::InvalidMap(format!("{field}[{i}]: {e}")))?,
                Coefficient::Complex([re, im]) => {
                    if !parse_rational(im)?.is_zero() {
                        return Err(Error::InvalidMap(format!(
                            "{field}[{i}]: complex coefficient in a map over the rationals"
                        )));
                    }
                    let re = parse_rational(re)?;
                    if !re.is_integer() {
                        return Err(Error::InvalidMap(format!("{field}[{i}]: non-integer coefficient")));
                    }
                    re.to_integer()
                }
            };
            parsed.push((c, t.e.clone()));
        }
        out.push(Poly::from_terms(nvars, parsed).map_err(|e| Error::InvalidMap(format!("{field}[{i}]: {e}")))?);
    }
    HomogeneousMap::new(degree, out).map_err(|e| Error::InvalidMap(format!("{field}: {e}")))
}

fn complex_lift(field: &str, polys: &[Vec<TermSpec>], nvars: usize) -> Result<ComplexTerms> {
    if polys.len() != nvars {
        return Err(Error::InvalidMap(format!(
            "{field}: expected {nvars} coordinate polynomials, got {}",
            polys.len()
        )));
    }
    polys
        .iter()
        .enumerate()
        .map(|(i, terms)| {
            terms
                .iter()
                .map(|t| {
                    exponent_check(field, i, &t.e, nvars)?;
                    let c = match &t.c {
                        Coefficient::Integer(s) => Complex64::new(parse_float(s)?, 0.0),
                        Coefficient::Complex([re, im]) => Complex64::new(parse_float(re)?, parse_float(im)?),
                    };
                    Ok((c, t.e.clone()))
                })
                .collect()
        })
        .collect()
}

fn locus(field: &str, spec: &LocusSpec) -> Result<LocusDescription> {
    let gens = spec
        .generators
        .iter()
        .map(|g| {
            let raw = g.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>()?;
            RatProjPoint::normalize(&raw)
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::InvalidMap(format!("{field}: {e}")))?;
    LocusDescription::new(spec.kind, gens, spec.dim).map_err(|e| Error::InvalidMap(format!("{field}: {e}")))
}

impl MapSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        from_json_str(text)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn is_complex(&self) -> bool {
        self.forward
            .iter()
            .chain(&self.backward)
            .flatten()
            .any(|t| matches!(&t.c, Coefficient::Complex([_, im]) if parse_rational(im).map_or(true, |v| !v.is_zero())))
    }

    /// The exact pair over ℚ; fails on genuinely complex coefficients.
    pub fn to_pair(&self) -> Result<BirationalPair> {
        let n = self.k + 1;
        let forward = integer_lift("forward", &self.forward, n, self.degree_forward)?;
        let backward = integer_lift("backward", &self.backward, n, self.degree_backward)?;
        let pair = BirationalPair::new(
            forward,
            backward,
            self.s,
            locus("ind_forward", &self.ind_forward)?,
            locus("ind_backward", &self.ind_backward)?,
        )
        .map_err(|e| match e {
            Error::InvalidPair(_) => e,
            other => Error::InvalidMap(other.to_string()),
        })?;
        Ok(pair)
    }

    /// Floating-point lifts (forward, backward) for complex-coefficient runs.
    pub fn to_complex(&self) -> Result<(ComplexTerms, ComplexTerms)> {
        let n = self.k + 1;
        Ok((complex_lift("forward", &self.forward, n)?, complex_lift("backward", &self.backward, n)?))
    }

    pub fn from_pair(pair: &BirationalPair) -> Self {
        let terms = |f: &HomogeneousMap| -> Vec<Vec<TermSpec>> {
            f.polys()
                .iter()
                .map(|p| {
                    p.terms()
                        .map(|(e, c)| TermSpec {
                            c: Coefficient::Integer(c.to_string()),
                            e: e.clone(),
                        })
                        .collect()
                })
                .collect()
        };
        let locus = |l: &LocusDescription| LocusSpec {
            kind: l.kind(),
            generators: l
                .generators()
                .iter()
                .map(|g| g.coords().iter().map(|c| c.to_string()).collect())
                .collect(),
            dim: l.declared_dimension(),
        };
        MapSpec {
            k: pair.k(),
            degree_forward: pair.d(),
            degree_backward: pair.delta(),
            s: pair.s,
            forward: terms(&pair.forward),
            backward: terms(&pair.backward),
            ind_forward: locus(&pair.ind_forward),
            ind_backward: locus(&pair.ind_backward),
        }
    }
}

/// Parameters of g = f∘A for the quadratic Hénon map f with rational a, b,
/// where `a_inverse` is the matrix of A⁻¹.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HenonConfig {
    pub a: String,
    pub b: String,
    pub a_inverse: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prime: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HenonParams {
    pub a: BigRational,
    pub b: BigRational,
    pub a_inverse: RatMatrix,
    pub prime: Option<u64>,
}

impl HenonConfig {
    pub fn parse(&self) -> Result<HenonParams> {
        let a = parse_rational(&self.a)?;
        let b = parse_rational(&self.b)?;
        if self.a_inverse.len() != 3 || self.a_inverse.iter().any(|r| r.len() != 3) {
            return Err(Error::InvalidMap("a_inverse must be a 3×3 matrix".into()));
        }
        let a_inverse = self
            .a_inverse
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(HenonParams {
            a,
            b,
            a_inverse,
            prime: self.prime,
        })
    }

    pub fn from_params(a: &BigRational, b: &BigRational, a_inverse: &RatMatrix, prime: Option<u64>) -> Self {
        HenonConfig {
            a: a.to_string(),
            b: b.to_string(),
            a_inverse: a_inverse
                .iter()
                .map(|r| r.iter().map(|q| q.to_string()).collect())
                .collect(),
            prime,
        }
    }
}

/// A 3×3 matrix with `fill` everywhere except the listed entries.
pub fn matrix_with(fill: &BigRational, entries: &[((usize, usize), BigRational)]) -> RatMatrix {
    let mut m = vec![vec![fill.clone(); 3]; 3];
    for ((i, j), v) in entries {
        m[*i][*j] = v.clone();
    }
    m
}

pub fn identity_matrix(n: usize) -> RatMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect()
}
