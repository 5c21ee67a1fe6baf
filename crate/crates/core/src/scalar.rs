//! Scalar fields used for state values.
//!
//! Exact paths run over [`Rational`]; floating paths over `f64`; resolvents over
//! `Complex64`. Breakpoints and times are always [`Rational`].

use crate::error::{Error, Result};
use crate::graph::Coef;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

pub type Rational = BigRational;

/// Value type of a state entry.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// Type of `|x|`, used for norms.
    type Real: Clone + Debug + PartialOrd + Zero + Add<Output = Self::Real> + Send + Sync;

    fn from_rational(r: &Rational) -> Self;

    /// Converts an operator coefficient. Exact scalars need exact coefficients.
    fn from_coef(c: &Coef) -> Result<Self>;

    fn modulus(&self) -> Self::Real;

    fn real_to_f64(r: &Self::Real) -> f64;

    fn to_complex(&self) -> Complex64;

    /// `true` for values on the closed nonnegative real half-line.
    fn is_nonnegative(&self) -> bool;
}

impl Scalar for Rational {
    type Real = Rational;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn from_coef(c: &Coef) -> Result<Self> {
        c.exact
            .clone()
            .ok_or_else(|| Error::Precision("operator coefficient is not exact".into()))
    }

    fn modulus(&self) -> Rational {
        self.abs()
    }

    fn real_to_f64(r: &Rational) -> f64 {
        rational_to_f64(r)
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(rational_to_f64(self), 0.0)
    }

    fn is_nonnegative(&self) -> bool {
        !self.is_negative()
    }
}

impl Scalar for f64 {
    type Real = f64;

    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }

    fn from_coef(c: &Coef) -> Result<Self> {
        Ok(c.approx)
    }

    fn modulus(&self) -> f64 {
        self.abs()
    }

    fn real_to_f64(r: &f64) -> f64 {
        *r
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(*self, 0.0)
    }

    fn is_nonnegative(&self) -> bool {
        *self >= 0.0
    }
}

impl Scalar for Complex64 {
    type Real = f64;

    fn from_rational(r: &Rational) -> Self {
        Complex64::new(rational_to_f64(r), 0.0)
    }

    fn from_coef(c: &Coef) -> Result<Self> {
        Ok(Complex64::new(c.approx, 0.0))
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn real_to_f64(r: &f64) -> f64 {
        *r
    }

    fn to_complex(&self) -> Complex64 {
        *self
    }

    fn is_nonnegative(&self) -> bool {
        self.re >= 0.0 && self.im == 0.0
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Very large numerators and denominators overflow the direct conversion.
    let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000) as usize;
    let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Exact rational value of a finite `f64`.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Argument(format!("non-finite value {x}")))
}

pub fn floor_to_i64(r: &Rational) -> Option<i64> {
    r.floor().to_integer().to_i64()
}

pub fn fract(r: &Rational) -> Rational {
    r - r.floor()
}

/// Parses `p/q` or an integer. Decimal literals are rejected.
pub fn parse_exact(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("bad numerator in `{s}`")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("bad denominator in `{s}`")))?;
        if q.is_zero() {
            return Err(Error::Argument(format!("zero denominator in `{s}`")));
        }
        Ok(Rational::new(p, q))
    } else if s.contains(['.', 'e', 'E']) {
        Err(Error::Precision(format!(
            "`{s}` is a decimal literal; use p/q for exact quantities"
        )))
    } else {
        let p: BigInt = s
            .parse()
            .map_err(|_| Error::Argument(format!("bad rational `{s}`")))?;
        Ok(Rational::from_integer(p))
    }
}

/// Parses `p/q`, an integer, or a plain decimal such as `-0.125`, all exactly.
pub fn parse_rational_or_decimal(s: &str) -> Result<Rational> {
    match parse_exact(s) {
        Ok(r) => Ok(r),
        Err(Error::Precision(_)) => parse_decimal_exact(s),
        Err(e) => Err(e),
    }
}

fn parse_decimal_exact(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Argument(format!("bad decimal `{s}`"));
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}0").parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i32 - 1;
    let ten = BigInt::from(10);
    let mut r = Rational::from_integer(digits);
    if scale >= 0 {
        r *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exact_literals() {
        assert_eq!(parse_exact("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_exact("-4").unwrap(), int(-4));
        assert!(matches!(parse_exact("0.5"), Err(Error::Precision(_))));
        assert!(parse_exact("1/0").is_err());
    }

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_rational_or_decimal("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational_or_decimal("-2.5e-1").unwrap(), ratio(-1, 4));
        assert_eq!(parse_rational_or_decimal("1e2").unwrap(), int(100));
        assert!(parse_rational_or_decimal("1.2.3").is_err());
    }

    #[test]
    fn huge_rationals_convert() {
        let big = Rational::new(
            num_traits::pow(BigInt::from(10), 400) * 3,
            num_traits::pow(BigInt::from(10), 400) * 4,
        );
        assert!((rational_to_f64(&big) - 0.75).abs() < 1e-15);
    }
}
