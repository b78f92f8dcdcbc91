//! Roots of the expected Euler characteristic polynomials `E_d = E_{d,0}` on
//! `[0, 1]`, their interleaving across dimensions, and the critical points
//! of the codimension-one variance `V_{d,d-1}`.
//!
//! `E_d` has `d` sign variations, so by Descartes' rule it has at most `d`
//! positive roots counted with multiplicity. One of them is `q = 1`. Finding
//! `d - 1` disjoint sign-change brackets inside `(0, 1)` therefore accounts
//! for every positive root, each simple, and certifies the isolation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::moments::{mean_voxel, variance_codim_one_closed_form, variance_voxel, MomentsError};
use crate::poly::{rational_string, rational_to_f64, RationalPolynomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("dimension must be at least {min}, got {d}")]
    BadDimension { d: usize, min: usize },
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("certification failed for d = {d}: found {found} interior sign changes, expected {expected}")]
    Certification {
        d: usize,
        found: usize,
        expected: usize,
    },
    #[error("refinement budget exhausted comparing roots of E_{d} and E_{}", d + 1)]
    Inconclusive { d: usize },
    #[error(transparent)]
    Moments(#[from] MomentsError),
}

/// Interval widths default to `10^-12`.
pub fn default_tolerance() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(10u64).pow(12))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn half() -> BigRational {
    rat(1, 2)
}

/// A closed rational interval holding exactly one root; `lo == hi` marks an
/// exact root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootInterval {
    pub fn exact(x: BigRational) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) * half()
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// Halves the interval, keeping the half where `poly` changes sign.
    fn bisect(&mut self, poly: &RationalPolynomial) {
        if self.is_exact() {
            return;
        }
        let mid = self.midpoint();
        let s_mid = poly.sign_at(&mid);
        if s_mid == 0 {
            *self = Self::exact(mid);
        } else if s_mid == poly.sign_at(&self.lo) {
            self.lo = mid;
        } else {
            self.hi = mid;
        }
    }

    fn refine_to(&mut self, poly: &RationalPolynomial, tolerance: &BigRational) {
        while &self.width() > tolerance {
            self.bisect(poly);
        }
    }
}

#[derive(Serialize)]
struct IntervalJson {
    lo: String,
    hi: String,
    midpoint: f64,
    exact: bool,
}

impl Serialize for RootInterval {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        IntervalJson {
            lo: rational_string(&self.lo),
            hi: rational_string(&self.hi),
            midpoint: rational_to_f64(&self.midpoint()),
            exact: self.is_exact(),
        }
        .serialize(serializer)
    }
}

/// The `d + 1` roots of `E_d` in `[0, 1]`, ascending; the first and last are
/// the exact endpoint roots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootSet {
    pub d: usize,
    pub roots: Vec<RootInterval>,
}

impl RootSet {
    pub fn interior(&self) -> &[RootInterval] {
        &self.roots[1..self.roots.len() - 1]
    }
}

/// `E_d(q)`.
pub fn euler_polynomial(d: usize) -> Result<RationalPolynomial, AnalysisError> {
    Ok(mean_voxel(d, 0)?)
}

/// Scan points in `(0, 1)`: a linear grid plus geometric points accumulating
/// at both ends, all dyadic.
fn scan_grid(linear: i64) -> Vec<BigRational> {
    let mut points: Vec<BigRational> = (1..linear).map(|j| rat(j, linear)).collect();
    for e in 7..=48u32 {
        let step = BigRational::new(BigInt::one(), BigInt::one() << e);
        points.push(step.clone());
        for j in 0..4 {
            points.push(BigRational::one() - &step * rat(4 + j, 4));
        }
    }
    points.sort();
    points.dedup();
    points
}

/// Sign-change brackets (or exact zeros) of `poly` strictly inside `(0, 1)`.
fn brackets(poly: &RationalPolynomial, grid: &[BigRational]) -> Vec<RootInterval> {
    let mut found = Vec::new();
    let mut prev: Option<(BigRational, i32)> = None;
    for x in grid {
        let s = poly.sign_at(x);
        if s == 0 {
            found.push(RootInterval::exact(x.clone()));
            prev = None;
            continue;
        }
        if let Some((px, ps)) = &prev {
            if *ps != s {
                found.push(RootInterval {
                    lo: px.clone(),
                    hi: x.clone(),
                });
            }
        }
        prev = Some((x.clone(), s));
    }
    found
}

/// Isolates every root of `E_d` in `[0, 1]` to intervals of width at most
/// `tolerance`.
pub fn isolate_roots(d: usize, tolerance: &BigRational) -> Result<RootSet, AnalysisError> {
    if d < 1 {
        return Err(AnalysisError::BadDimension { d, min: 1 });
    }
    if !tolerance.is_positive() {
        return Err(AnalysisError::BadTolerance);
    }
    let poly = euler_polynomial(d)?;
    let expected = d - 1;
    let variations = poly.sign_variations();
    let mut interior = Vec::new();
    // densify the linear grid a few times before giving up
    for linear in [64, 512, 4096] {
        interior = brackets(&poly, &scan_grid(linear));
        if interior.len() >= expected {
            break;
        }
    }
    if interior.len() != expected || variations != d || !poly.eval(&BigRational::one()).is_zero() {
        return Err(AnalysisError::Certification {
            d,
            found: interior.len(),
            expected,
        });
    }
    for root in &mut interior {
        root.refine_to(&poly, tolerance);
    }
    let mut roots = Vec::with_capacity(d + 1);
    roots.push(RootInterval::exact(BigRational::zero()));
    roots.extend(interior);
    roots.push(RootInterval::exact(BigRational::one()));
    Ok(RootSet { d, roots })
}

fn primitive_rem(a: &RationalPolynomial, b: &RationalPolynomial) -> RationalPolynomial {
    let (_, r) = a.div_rem(b);
    // a positive rescaling keeps the sign pattern and tames coefficient growth
    match r.degree().map(|deg| r.coeff(deg).abs()) {
        Some(lead) => r.scale(&lead.recip()),
        None => r,
    }
}

fn sturm_chain(poly: &RationalPolynomial) -> Vec<RationalPolynomial> {
    let mut chain = vec![poly.clone(), poly.derivative()];
    loop {
        let n = chain.len();
        let next = primitive_rem(&chain[n - 2], &chain[n - 1]);
        if next.is_zero() {
            break;
        }
        chain.push(-&next);
    }
    chain
}

fn sign_changes_at(chain: &[RationalPolynomial], x: &BigRational) -> usize {
    let signs: Vec<i32> = chain
        .iter()
        .map(|p| p.sign_at(x))
        .filter(|&s| s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct roots of `poly` in the open interval `(a, b)`, by a
/// Sturm sequence. Neither endpoint may be a root.
pub fn sturm_count(poly: &RationalPolynomial, a: &BigRational, b: &BigRational) -> usize {
    assert!(
        poly.sign_at(a) != 0 && poly.sign_at(b) != 0,
        "endpoint is a root"
    );
    let chain = sturm_chain(poly);
    sign_changes_at(&chain, a) - sign_changes_at(&chain, b)
}

/// Independent root count for small `d`: deflates the endpoint roots and
/// counts the remaining roots in `(0, 1)` with a Sturm sequence.
pub fn sturm_interior_root_count(d: usize) -> Result<usize, AnalysisError> {
    if d < 1 {
        return Err(AnalysisError::BadDimension { d, min: 1 });
    }
    let poly = euler_polynomial(d)?;
    let endpoints = RationalPolynomial::from_int_terms(&[(1, -1), (2, 1)]);
    let (deflated, rem) = poly.div_rem(&endpoints);
    assert!(rem.is_zero(), "0 and 1 are roots of every E_d");
    if deflated.degree() == Some(0) {
        return Ok(0);
    }
    Ok(sturm_count(
        &deflated,
        &BigRational::zero(),
        &BigRational::one(),
    ))
}

/// Strict comparison of two isolating intervals: `Some(true)` when `a < b`
/// is certain, `Some(false)` when `a > b` is certain, `None` when they
/// overlap.
fn compare(a: &RootInterval, b: &RootInterval) -> Option<bool> {
    if a.hi < b.lo {
        Some(true)
    } else if b.hi < a.lo {
        Some(false)
    } else {
        None
    }
}

const REFINEMENT_BUDGET: usize = 256;

/// Refines both intervals until they separate.
fn certified_less(
    a: &mut RootInterval,
    pa: &RationalPolynomial,
    b: &mut RootInterval,
    pb: &RationalPolynomial,
) -> Option<bool> {
    for _ in 0..REFINEMENT_BUDGET {
        if let Some(v) = compare(a, b) {
            return Some(v);
        }
        if a.is_exact() && b.is_exact() {
            return Some(false);
        }
        a.bisect(pa);
        b.bisect(pb);
    }
    compare(a, b)
}

/// `sqrt(a) < b` for nonnegative roots, that is `a < b^2`.
fn certified_sqrt_less(
    a: &mut RootInterval,
    pa: &RationalPolynomial,
    b: &mut RootInterval,
    pb: &RationalPolynomial,
) -> Option<bool> {
    for _ in 0..REFINEMENT_BUDGET {
        if a.hi < &b.lo * &b.lo {
            return Some(true);
        }
        if &b.hi * &b.hi < a.lo {
            return Some(false);
        }
        if a.is_exact() && b.is_exact() {
            return Some(false);
        }
        a.bisect(pa);
        b.bisect(pb);
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterleavingVerdict {
    /// Compares the roots of `E_d` with those of `E_{d+1}`.
    pub d: usize,
    pub interleaved: bool,
    /// `sqrt(q_{d,i}) < q_{d,i+1}` for every interior root `q_{d,i}` of `E_d`.
    pub sqrt_inequality: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InterleavingReport {
    pub d_max: usize,
    pub root_sets: Vec<RootSet>,
    pub verdicts: Vec<InterleavingVerdict>,
}

impl InterleavingReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts
            .iter()
            .all(|v| v.interleaved && v.sqrt_inequality)
    }
}

/// Certifies `q_{d+1,i} < q_{d,i} < q_{d+1,i+1}` for the interior roots of
/// every `E_d` with `d < d_max`, and the square-root inequality for every
/// `E_d` with `d <= d_max`. A violation is reported in the verdicts; failing
/// to separate two intervals within the refinement budget is an error.
pub fn verify_interleaving(
    d_max: usize,
    tolerance: &BigRational,
) -> Result<InterleavingReport, AnalysisError> {
    if d_max < 2 {
        return Err(AnalysisError::BadDimension { d: d_max, min: 2 });
    }
    let polys: Vec<RationalPolynomial> = (1..=d_max)
        .map(euler_polynomial)
        .collect::<Result<_, _>>()?;
    let mut sets: Vec<RootSet> = (1..=d_max)
        .map(|d| isolate_roots(d, tolerance))
        .collect::<Result<_, _>>()?;
    let mut verdicts = Vec::new();
    for d in 1..=d_max {
        let (pd, set_index) = (&polys[d - 1], d - 1);
        let mut interleaved = true;
        if d < d_max {
            let pu = &polys[d];
            let (lower, upper) = sets.split_at_mut(set_index + 1);
            let roots = &mut lower[set_index].roots;
            let next = &mut upper[0].roots;
            for i in 1..d {
                let below = certified_less(&mut next[i], pu, &mut roots[i], pd)
                    .ok_or(AnalysisError::Inconclusive { d })?;
                let above = certified_less(&mut roots[i], pd, &mut next[i + 1], pu)
                    .ok_or(AnalysisError::Inconclusive { d })?;
                interleaved &= below && above;
            }
        }
        let roots = &mut sets[set_index].roots;
        let mut sqrt_inequality = true;
        for i in 1..d {
            let (head, tail) = roots.split_at_mut(i + 1);
            let holds = certified_sqrt_less(&mut head[i], pd, &mut tail[0], pd)
                .ok_or(AnalysisError::Inconclusive { d })?;
            sqrt_inequality &= holds;
        }
        verdicts.push(InterleavingVerdict {
            d,
            interleaved,
            sqrt_inequality,
        });
    }
    Ok(InterleavingReport {
        d_max,
        root_sets: sets,
        verdicts,
    })
}

/// `a + b sqrt(c)` with `c` square-free (or `b = 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigInt,
}

impl Surd {
    pub fn rational(a: BigRational) -> Self {
        Self {
            a,
            b: BigRational::zero(),
            c: BigInt::zero(),
        }
    }

    /// `a + b sqrt(radicand)`, pulling square factors out of the radicand.
    pub fn new(a: BigRational, b: BigRational, radicand: BigInt) -> Self {
        assert!(!radicand.is_negative());
        let mut c = radicand;
        let mut outside = BigInt::one();
        let mut f = BigInt::from(2);
        while &f * &f <= c {
            let sq = &f * &f;
            while c.is_multiple_of(&sq) {
                c /= &sq;
                outside *= &f;
            }
            f += 1;
        }
        let b = b * BigRational::from_integer(outside);
        if c.is_one() {
            return Self::rational(a + b);
        }
        if c.is_zero() || b.is_zero() {
            return Self::rational(a);
        }
        Self { a, b, c }
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.a)
            + rational_to_f64(&self.b) * self.c.to_f64().unwrap_or(f64::NAN).sqrt()
    }

    /// Human readable form such as `1/2 - 1/6*sqrt(3)`.
    pub fn expression(&self) -> String {
        if self.b.is_zero() {
            return rational_string(&self.a);
        }
        let sign = if self.b.is_negative() { '-' } else { '+' };
        format!(
            "{} {} {}*sqrt({})",
            rational_string(&self.a),
            sign,
            rational_string(&self.b.abs()),
            self.c
        )
    }
}

#[derive(Serialize)]
struct SurdJson {
    a: String,
    b: String,
    c: String,
    expression: String,
    decimal: f64,
}

impl Serialize for Surd {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SurdJson {
            a: rational_string(&self.a),
            b: rational_string(&self.b),
            c: self.c.to_string(),
            expression: self.expression(),
            decimal: self.to_f64(),
        }
        .serialize(serializer)
    }
}

/// Critical points of `V_{d,d-1}` on `(0, 1)`: a local minimum at `1/2` and
/// local maxima at `1/2 ± sqrt((4d-1)(2d-1)) / (8d-2)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoints {
    pub d: usize,
    pub minimum: Surd,
    pub maxima: [Surd; 2],
    /// `sqrt((4d-1)(2d-1)) / (8d-2)`.
    pub offset: f64,
    /// The derivative vanishes exactly at all three points.
    pub verified: bool,
    /// Largest `|V'|` over the maxima, evaluated in floating point.
    pub max_derivative_residual: f64,
}

/// Closed-form critical points, verified against the derivative of
/// `V_{d,d-1}`. For `d <= 8` the polynomial comes from the variance triple
/// sum; beyond that from its closed form.
pub fn variance_critical_points(d: usize) -> Result<CriticalPoints, AnalysisError> {
    if d < 1 {
        return Err(AnalysisError::BadDimension { d, min: 1 });
    }
    let v = if d <= 8 {
        variance_voxel(d, d - 1)?
    } else {
        variance_codim_one_closed_form(d as u64)
    };
    let dv = v.derivative();
    let ddv = dv.derivative();
    let radicand = BigInt::from((4 * d - 1) as u64) * BigInt::from((2 * d - 1) as u64);
    let denom = BigRational::from_integer(BigInt::from((8 * d - 2) as u64));
    let b = denom.recip();
    let r2 = BigRational::from_integer(radicand.clone()) * &b * &b;

    // V'(q) = (q - 1/2) (alpha q^2 + beta q + gamma) with roots 1/2 ± r exactly
    // when beta = -alpha and gamma = alpha (1/4 - r^2)
    let linear = RationalPolynomial::from_terms([(0, -half()), (1, BigRational::one())]);
    let (quad, rem) = dv.div_rem(&linear);
    let alpha = quad.coeff(2);
    let verified = rem.is_zero()
        && dv.eval(&half()).is_zero()
        && ddv.eval(&half()).is_positive()
        && !alpha.is_zero()
        && quad.coeff(1) == -alpha.clone()
        && quad.coeff(0) == &alpha * (rat(1, 4) - &r2)
        && quad.degree() == Some(2);

    let maxima = [
        Surd::new(half(), -b.clone(), radicand.clone()),
        Surd::new(half(), b.clone(), radicand.clone()),
    ];
    let max_derivative_residual = maxima
        .iter()
        .map(|m| dv.eval_f64(m.to_f64()).abs())
        .fold(0.0, f64::max);
    let offset = radicand.to_f64().unwrap_or(f64::NAN).sqrt() / (8 * d - 2) as f64;
    Ok(CriticalPoints {
        d,
        minimum: Surd::rational(half()),
        maxima,
        offset,
        verified,
        max_derivative_residual,
    })
}

/// Whether `E_d(q) = E_d(1 - q)` and whether `E_d(q) = -E_d(1 - q)`.
pub fn reflection_symmetry(d: usize) -> Result<(bool, bool), AnalysisError> {
    let poly = euler_polynomial(d)?;
    let reflected = poly.compose_one_minus();
    Ok((poly == reflected, poly == -&reflected))
}

/// Signs of `E_d` at the gaps between consecutive roots, which alternate
/// when every root is simple.
pub fn gap_signs(set: &RootSet) -> Result<Vec<i32>, AnalysisError> {
    let poly = euler_polynomial(set.d)?;
    Ok(set
        .roots
        .windows(2)
        .map(|w| poly.sign_at(&((&w[0].hi + &w[1].lo) * half())))
        .collect())
}
