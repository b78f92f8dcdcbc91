//! Exact expected-value and variance polynomials of the intrinsic volumes,
//! normalized by the volume `n^d`.
//!
//! Voxel and closed-faces polynomials are in `q = 1 - p`; independent-faces
//! and plaquette polynomials are in `p`. [`RationalPolynomial::compose_one_minus`]
//! converts between the two.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::binomial;
use crate::measure::open_cell_contribution;
use crate::models::Model;
use crate::poly::{int, rational_to_f64, RationalPolynomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MomentsError {
    #[error("index k = {k} exceeds the dimension d = {d}")]
    IndexOutOfRange { d: usize, k: usize },
    #[error("exponent base must be at least 2, got {0}")]
    BadBase(u64),
    #[error("exponents {base}^{d} are too large to represent")]
    DegreeOverflow { d: usize, base: u64 },
    #[error("internal error: term q^{0} with a negative exponent survived the variance sum")]
    NegativeExponent(i64),
    #[error("pair dimensions need i, j <= s <= d (got i = {i}, j = {j}, s = {s}, d = {d})")]
    BadPair {
        i: usize,
        j: usize,
        s: usize,
        d: usize,
    },
    #[error("the variance formula needs n > 2, got n = {0}")]
    SideTooSmall(u64),
    #[error("q must lie in [0, 1]")]
    ProbabilityOutOfRange,
    #[error("variance vanishes at this q, so the normal approximation bound is undefined")]
    ZeroVariance,
    #[error("{0} is only available for the voxel and closed-faces models")]
    Unsupported(&'static str),
}

/// The indeterminate a model's polynomials are written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    Q,
    P,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::Q => "q",
            Variable::P => "p",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Mean,
    Variance,
}

pub fn model_variable(model: Model) -> Variable {
    match model {
        Model::Voxel | Model::ClosedFaces => Variable::Q,
        Model::IndependentFaces | Model::Plaquette => Variable::P,
    }
}

fn check_index(d: usize, k: usize) -> Result<(), MomentsError> {
    if k > d {
        return Err(MomentsError::IndexOutOfRange { d, k });
    }
    Ok(())
}

/// `base^(d - i)` for every `i`, rejecting bases and dimensions whose
/// doubled exponents would not fit.
fn exponents(d: usize, base: u64) -> Result<Vec<u64>, MomentsError> {
    if base < 2 {
        return Err(MomentsError::BadBase(base));
    }
    base.checked_pow(d as u32)
        .filter(|&t| t <= 1 << 61)
        .ok_or(MomentsError::DegreeOverflow { d, base })?;
    Ok((0..=d).map(|i| base.pow((d - i) as u32)).collect())
}

fn one_minus_power(e: u64) -> RationalPolynomial {
    RationalPolynomial::from_int_terms(&[(0, 1), (e, -1)])
}

/// Probability `1 - q^(base^(d-i))` that an open `i`-cell is included, when
/// it is covered by `base^(d-i)` independent sites.
pub fn inclusion_probability(
    d: usize,
    i: usize,
    base: u64,
) -> Result<RationalPolynomial, MomentsError> {
    check_index(d, i)?;
    Ok(one_minus_power(exponents(d, base)?[i]))
}

/// Mean polynomial in `q` for the family where an open `i`-cell is included
/// with probability `1 - q^(m^(d-i))`. `m = 2` is the voxel model and
/// `m = 3` the closed-faces model.
pub fn mean_generalized(d: usize, k: usize, m: u64) -> Result<RationalPolynomial, MomentsError> {
    check_index(d, k)?;
    let exps = exponents(d, m)?;
    if k == d {
        return Ok(one_minus_power(1));
    }
    let mut poly = RationalPolynomial::zero();
    for (i, &e) in exps.iter().enumerate().skip(k) {
        let c = binomial(d as u64, i as u64) * binomial(i as u64, k as u64);
        let c = c as i64;
        let signed = if (i - k).is_multiple_of(2) { -c } else { c };
        poly.add_term(e, int(signed));
    }
    Ok(poly)
}

/// `E_{d,k}(q)` for the voxel model.
pub fn mean_voxel(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    mean_generalized(d, k, 2)
}

pub fn mean_closed_faces(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    mean_generalized(d, k, 3)
}

/// Ordered pairs of an `i`-face and a `j`-face of a fixed `s`-cube whose
/// smallest common cube is that `s`-cube, by inclusion–exclusion over the
/// sub-cubes.
pub fn pair_count(i: usize, j: usize, s: usize) -> u64 {
    let mut total: i128 = 0;
    for l in 0..=s {
        let c = binomial(s as u64, l as u64) as i128
            * binomial(l as u64, i as u64) as i128
            * binomial(l as u64, j as u64) as i128;
        if c == 0 {
            continue;
        }
        let term = c << (s + l - i - j);
        if (s - l).is_multiple_of(2) {
            total += term;
        } else {
            total -= term;
        }
    }
    u64::try_from(total).expect("pair counts are nonnegative")
}

/// Probability that two cells with common cube of dimension `s` are both
/// included: either the common cube is, or it is not and each cell is
/// rescued by one of its remaining covering sites.
pub fn pair_probability(
    d: usize,
    i: usize,
    j: usize,
    s: usize,
    base: u64,
) -> Result<RationalPolynomial, MomentsError> {
    if s > d || i > s || j > s {
        return Err(MomentsError::BadPair { i, j, s, d });
    }
    let exps = exponents(d, base)?;
    let shared = RationalPolynomial::monomial(exps[s], int(1));
    let rescue_x = one_minus_power(exps[i] - exps[s]);
    let rescue_y = one_minus_power(exps[j] - exps[s]);
    Ok(&one_minus_power(exps[s]) + &(&shared * &(&rescue_x * &rescue_y)))
}

pub fn pair_probability_voxel(
    i: usize,
    j: usize,
    s: usize,
    d: usize,
) -> Result<RationalPolynomial, MomentsError> {
    pair_probability(d, i, j, s, 2)
}

/// Normalized variance for the exponent-base family, as the triple sum over
/// cell dimensions `i`, `j` and common-cube dimension `s` of
/// `mu_{k,i} mu_{k,j} C(d,s) N_{i,j,s} q^(B_i + B_j) (q^(-B_s) - 1)` with
/// `B_t = base^(d-t)`. Valid on lattices with `n > 2`.
pub fn variance_generalized(
    d: usize,
    k: usize,
    base: u64,
) -> Result<RationalPolynomial, MomentsError> {
    check_index(d, k)?;
    let exps = exponents(d, base)?;
    let mut laurent: BTreeMap<i64, BigInt> = BTreeMap::new();
    for i in 0..=d {
        for j in 0..=d {
            for s in 0..=d {
                let coeff = BigInt::from(open_cell_contribution(i, k))
                    * BigInt::from(open_cell_contribution(j, k))
                    * BigInt::from(binomial(d as u64, s as u64))
                    * BigInt::from(pair_count(i, j, s));
                if coeff.is_zero() {
                    continue;
                }
                let outer = (exps[i] + exps[j]) as i64;
                let shifted = outer - exps[s] as i64;
                *laurent.entry(shifted).or_default() += &coeff;
                *laurent.entry(outer).or_default() -= &coeff;
            }
        }
    }
    let mut poly = RationalPolynomial::zero();
    for (e, c) in laurent {
        if c.is_zero() {
            continue;
        }
        if e < 0 {
            return Err(MomentsError::NegativeExponent(e));
        }
        poly.add_term(e as u64, BigRational::from_integer(c));
    }
    Ok(poly)
}

/// `V_{d,k}(q)` for the voxel model.
pub fn variance_voxel(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    variance_generalized(d, k, 2)
}

pub fn variance_closed_faces(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    variance_generalized(d, k, 3)
}

/// `d^2 q - (5d^2 - d) q^2 + (8d^2 - 2d) q^3 - (4d^2 - d) q^4`, the
/// codimension-one voxel variance in closed form.
pub fn variance_codim_one_closed_form(d: u64) -> RationalPolynomial {
    let d = BigInt::from(d);
    let d2 = &d * &d;
    RationalPolynomial::from_terms([
        (1, BigRational::from_integer(d2.clone())),
        (2, BigRational::from_integer(-(BigInt::from(5) * &d2 - &d))),
        (
            3,
            BigRational::from_integer(BigInt::from(8) * &d2 - BigInt::from(2) * &d),
        ),
        (4, BigRational::from_integer(-(BigInt::from(4) * &d2 - &d))),
    ])
}

/// `C(d,k) p^k (1-p)^(d-k)`, in `p`.
pub fn mean_independent_faces(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    check_index(d, k)?;
    let one_minus_p = one_minus_power(1);
    let c = int(binomial(d as u64, k as u64) as i64);
    Ok(RationalPolynomial::monomial(k as u64, c) * one_minus_p.pow((d - k) as u32))
}

/// `sum_{i>=k} C(d,i) C(i,k)^2 (p^i - p^(2i))`, in `p`.
pub fn variance_independent_faces(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    check_index(d, k)?;
    let mut poly = RationalPolynomial::zero();
    for i in k..=d {
        let c = binomial(i as u64, k as u64);
        let c = int((binomial(d as u64, i as u64) * c * c) as i64);
        poly.add_term(i as u64, c.clone());
        poly.add_term(2 * i as u64, -c);
    }
    Ok(poly)
}

/// `(-1)^(d-k) C(d,k) (p - 1)` for `k < d` and `p` for `k = d`, in `p`.
pub fn mean_plaquette(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    check_index(d, k)?;
    if k == d {
        return Ok(RationalPolynomial::x());
    }
    let c = binomial(d as u64, k as u64) as i64;
    let c = if (d - k).is_multiple_of(2) { c } else { -c };
    Ok(RationalPolynomial::from_int_terms(&[(0, -c), (1, c)]))
}

/// `C(d,k)^2 (p - p^2)`, in `p`.
pub fn variance_plaquette(d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    check_index(d, k)?;
    let c = binomial(d as u64, k as u64) as i64;
    Ok(RationalPolynomial::from_int_terms(&[
        (1, c * c),
        (2, -c * c),
    ]))
}

pub fn mean(model: Model, d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    match model {
        Model::Voxel => mean_voxel(d, k),
        Model::ClosedFaces => mean_closed_faces(d, k),
        Model::IndependentFaces => mean_independent_faces(d, k),
        Model::Plaquette => mean_plaquette(d, k),
    }
}

pub fn variance(model: Model, d: usize, k: usize) -> Result<RationalPolynomial, MomentsError> {
    match model {
        Model::Voxel => variance_voxel(d, k),
        Model::ClosedFaces => variance_closed_faces(d, k),
        Model::IndependentFaces => variance_independent_faces(d, k),
        Model::Plaquette => variance_plaquette(d, k),
    }
}

pub fn moment(
    model: Model,
    kind: Kind,
    d: usize,
    k: usize,
) -> Result<RationalPolynomial, MomentsError> {
    match kind {
        Kind::Mean => mean(model, d, k),
        Kind::Variance => variance(model, d, k),
    }
}

/// Whether the model's variance formula holds on a lattice of side `n`.
/// Voxel and closed-faces variances rely on unique common cubes, which
/// fails for `n = 2`.
pub fn variance_valid_for(model: Model, n: u64) -> bool {
    match model {
        Model::Voxel | Model::ClosedFaces => n > 2,
        Model::IndependentFaces | Model::Plaquette => true,
    }
}

/// Serializable form of one polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolynomialRecord {
    pub model: Model,
    pub variable: Variable,
    pub d: usize,
    pub k: usize,
    pub kind: Kind,
    /// `(degree, "num/den")`, ascending degree.
    pub coeffs: Vec<(u64, String)>,
}

impl PolynomialRecord {
    pub fn new(model: Model, kind: Kind, d: usize, k: usize, poly: &RationalPolynomial) -> Self {
        Self {
            model,
            variable: model_variable(model),
            d,
            k,
            kind,
            coeffs: poly.coefficient_strings(),
        }
    }
}

/// Which per-cell moment estimate enters the normal approximation bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// Exact third and fourth absolute central moments of every cell.
    Exact,
    /// The uniform estimate `E|xi - E xi|^a <= 2 C(d,k)^a` for all cells.
    Coarse,
}

/// `E|X - EX|^3` and `E(X - EX)^4` for `X = value` with probability `prob`
/// and `0` otherwise.
pub fn two_point_central_moments(value: i64, prob: &BigRational) -> (BigRational, BigRational) {
    let c = BigRational::from_integer(BigInt::from(value.abs()));
    let rest = BigRational::one() - prob;
    let spread = prob * &rest;
    let c3 = &c * &c * &c;
    let c4 = &c3 * &c;
    let third = c3 * &spread * (&rest * &rest + prob * prob);
    let fourth = c4 * &spread * (&rest * &rest * &rest + prob * prob * prob);
    (third, fourth)
}

/// Right-hand side of the Stein-method Wasserstein bound for the
/// standardized `mu_k` of the voxel model:
///
/// `6^(2d) / sigma^3 * S3 + sqrt(26) 6^(3d/2) / (sqrt(pi) sigma^2) * sqrt(S4)`
///
/// with `sigma^2 = n^d V_{d,k}(q)` and `S_a` the sum over all open cells of
/// the `a`-th absolute central moment of the cell's contribution.
pub fn wasserstein_bound(
    d: usize,
    k: usize,
    q: &BigRational,
    n: u64,
    mode: BoundMode,
) -> Result<f64, MomentsError> {
    check_index(d, k)?;
    if n <= 2 {
        return Err(MomentsError::SideTooSmall(n));
    }
    if q.is_negative() || q > &BigRational::one() {
        return Err(MomentsError::ProbabilityOutOfRange);
    }
    let var = variance_voxel(d, k)?.eval(q);
    if !var.is_positive() {
        return Err(MomentsError::ZeroVariance);
    }
    // sums per unit volume; both terms then scale exactly as n^(-d/2)
    let (s3, s4) = match mode {
        BoundMode::Exact => {
            let mut s3 = BigRational::zero();
            let mut s4 = BigRational::zero();
            for i in k..=d {
                let prob = inclusion_probability(d, i, 2)?.eval(q);
                let (m3, m4) = two_point_central_moments(open_cell_contribution(i, k), &prob);
                let count = int(binomial(d as u64, i as u64) as i64);
                s3 += &count * m3;
                s4 += count * m4;
            }
            (rational_to_f64(&s3), rational_to_f64(&s4))
        }
        BoundMode::Coarse => {
            let c = binomial(d as u64, k as u64) as f64;
            let cells_per_unit = 2f64.powi(d as i32);
            (
                cells_per_unit * 2.0 * c.powi(3),
                cells_per_unit * 2.0 * c.powi(4),
            )
        }
    };
    let var = var.to_f64().unwrap_or(f64::NAN);
    let d_f = d as f64;
    let scale = (n as f64).powf(-d_f / 2.0);
    let first = 6f64.powf(2.0 * d_f) * s3 / var.powf(1.5);
    let second =
        26f64.sqrt() * 6f64.powf(1.5 * d_f) / (std::f64::consts::PI.sqrt() * var) * s4.sqrt();
    Ok((first + second) * scale)
}
