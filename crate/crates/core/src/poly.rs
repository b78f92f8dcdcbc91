//! Sparse univariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse {0:?} as an exact rational")]
pub struct ParseRationalError(pub String);

/// Parses `"a/b"`, an integer, or a finite decimal such as `"0.6"` or
/// `"-1.25e-3"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational, ParseRationalError> {
    let err = || ParseRationalError(text.to_owned());
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(all_digits.parse::<BigInt>().map_err(|_| err())?);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if negative { -value } else { value })
}

/// `"num/den"` in lowest terms, denominator always present.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// A polynomial `sum_e c_e x^e` stored as its nonzero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RationalPolynomial {
    coeffs: BTreeMap<u64, BigRational>,
}

impl RationalPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(0, c)
    }

    /// `x`.
    pub fn x() -> Self {
        Self::monomial(1, BigRational::one())
    }

    pub fn monomial(degree: u64, c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(degree, c);
        p
    }

    /// From `(degree, coefficient)` pairs; repeated degrees are summed.
    pub fn from_terms(terms: impl IntoIterator<Item = (u64, BigRational)>) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// From integer `(degree, coefficient)` pairs.
    pub fn from_int_terms(terms: &[(u64, i64)]) -> Self {
        Self::from_terms(terms.iter().map(|&(e, c)| (e, int(c))))
    }

    pub fn add_term(&mut self, degree: u64, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(degree).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&degree);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest degree with a nonzero coefficient; `None` for the zero
    /// polynomial.
    pub fn degree(&self) -> Option<u64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, degree: u64) -> BigRational {
        self.coeffs
            .get(&degree)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Nonzero terms in ascending degree.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.coeffs.iter().map(|(&e, c)| (e, c))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            coeffs: self.coeffs.iter().map(|(&e, v)| (e, v * c)).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// `p(x^factor)`.
    pub fn compose_power(&self, factor: u64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(&e, c)| (e * factor, c.clone()))
                .collect(),
        }
    }

    /// `p(1 - x)`, converting between polynomials in `q` and in `p = 1 - q`.
    pub fn compose_one_minus(&self) -> Self {
        let one_minus = Self::from_int_terms(&[(0, 1), (1, -1)]);
        self.compose(&one_minus)
    }

    /// `p(g(x))` by Horner's scheme over the dense degree range.
    pub fn compose(&self, inner: &Self) -> Self {
        let Some(top) = self.degree() else {
            return Self::zero();
        };
        let mut acc = Self::zero();
        for e in (0..=top).rev() {
            acc = &acc * inner;
            acc.add_term(0, self.coeff(e));
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        Self::from_terms(
            self.coeffs
                .iter()
                .filter(|(&e, _)| e > 0)
                .map(|(&e, c)| (e - 1, c * BigRational::from_integer(BigInt::from(e)))),
        )
    }

    /// Exact value at a rational point.
    pub fn eval(&self, x: &BigRational) -> BigRational {
        // ascending powers, reusing the previous power
        let mut acc = BigRational::zero();
        let mut power = BigRational::one();
        let mut at = 0u64;
        for (&e, c) in &self.coeffs {
            power *= num_traits::pow(x.clone(), (e - at) as usize);
            at = e;
            acc += c * &power;
        }
        acc
    }

    /// Sign of the value at `x` (`-1`, `0` or `1`).
    pub fn sign_at(&self, x: &BigRational) -> i32 {
        let v = self.eval(x);
        if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        }
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&e, c)| rational_to_f64(c) * x.powf(e as f64))
            .sum()
    }

    /// Number of sign alternations in the coefficient sequence (Descartes'
    /// bound on positive roots).
    pub fn sign_variations(&self) -> usize {
        let signs: Vec<bool> = self.coeffs.values().map(|c| c.is_positive()).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// Division with remainder by a nonzero divisor.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let d_deg = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.coeff(d_deg);
        let mut quotient = Self::zero();
        let mut rem = self.clone();
        while let Some(r_deg) = rem.degree() {
            if r_deg < d_deg {
                break;
            }
            let factor = rem.coeff(r_deg) / &lead;
            let shift = r_deg - d_deg;
            quotient.add_term(shift, factor.clone());
            for (e, c) in divisor.terms() {
                rem.add_term(e + shift, -(c * &factor));
            }
        }
        (quotient, rem)
    }

    /// `(degree, coefficient)` pairs with coefficients as `"num/den"`.
    pub fn coefficient_strings(&self) -> Vec<(u64, String)> {
        self.terms().map(|(e, c)| (e, rational_string(c))).collect()
    }

    /// Renders with an arbitrary variable name, e.g. `-q + 2q^2 - q^4`.
    pub fn display_with(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_owned();
        }
        let mut out = String::new();
        for (i, (e, c)) in self.terms().enumerate() {
            let negative = c.is_negative();
            let magnitude = c.abs();
            match (i, negative) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            let unit = magnitude.is_one() && e > 0;
            if !unit {
                if magnitude.is_integer() {
                    out.push_str(&magnitude.to_string());
                } else {
                    out.push_str(&format!("({magnitude})"));
                }
            }
            match e {
                0 => {}
                1 => out.push_str(var),
                _ => out.push_str(&format!("{var}^{e}")),
            }
        }
        out
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with("x"))
    }
}

impl Add for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn add(self, rhs: &RationalPolynomial) -> RationalPolynomial {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, c.clone());
        }
        out
    }
}

impl Sub for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn sub(self, rhs: &RationalPolynomial) -> RationalPolynomial {
        let mut out = self.clone();
        for (e, c) in rhs.terms() {
            out.add_term(e, -c.clone());
        }
        out
    }
}

impl Mul for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn mul(self, rhs: &RationalPolynomial) -> RationalPolynomial {
        let mut out = RationalPolynomial::zero();
        for (a, x) in self.terms() {
            for (b, y) in rhs.terms() {
                out.add_term(a + b, x * y);
            }
        }
        out
    }
}

impl Neg for &RationalPolynomial {
    type Output = RationalPolynomial;

    fn neg(self) -> RationalPolynomial {
        RationalPolynomial {
            coeffs: self.coeffs.iter().map(|(&e, c)| (e, -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for RationalPolynomial {
            type Output = RationalPolynomial;
            fn $m(self, rhs: RationalPolynomial) -> RationalPolynomial {
                (&self).$m(&rhs)
            }
        }
    )*};
}

forward_owned!(Add add, Sub sub, Mul mul);
