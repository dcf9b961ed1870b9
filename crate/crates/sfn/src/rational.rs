//! Exact rational arithmetic.
//!
//! All probabilities, biases and latencies in this crate are
//! arbitrary-precision rationals. We use [`num::BigRational`], which stores
//! values in lowest terms with a positive denominator, so equality is
//! structural and arithmetic never overflows.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use std::fmt;

pub type Rational = BigRational;

/// `numer/denom` as an exact rational. Panics on a zero denominator; intended
/// for literals in construction code and tests.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_u64(numer: u64, denom: u64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// 2^exp for any sign of `exp`.
pub fn pow2(exp: i32) -> Rational {
    if exp >= 0 {
        Rational::from_integer(BigInt::one() << exp as usize)
    } else {
        Rational::new(BigInt::one(), BigInt::one() << (-exp) as usize)
    }
}

/// The fair-splitter bias.
pub fn half() -> Rational {
    rat(1, 2)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid integer `{0}`")]
    BadInteger(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p/q"` or `"n"`. The result is normalized to lowest terms with a
/// positive denominator, so `"2/4"` parses equal to `"1/2"`.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(RationalParseError::Empty);
    }
    let (numer_text, denom_text) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (trimmed, None),
    };
    let numer: BigInt = numer_text
        .parse()
        .map_err(|_| RationalParseError::BadInteger(numer_text.to_string()))?;
    let denom: BigInt = match denom_text {
        Some(d) => d
            .parse()
            .map_err(|_| RationalParseError::BadInteger(d.to_string()))?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(RationalParseError::ZeroDenominator(trimmed.to_string()));
    }
    Ok(Rational::new(numer, denom))
}

/// Canonical text form: `"p/q"` in lowest terms, or just `"p"` when the
/// denominator is 1.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Display adapter so rationals can be embedded in `format!` without an
/// intermediate `String`.
pub struct DisplayRational<'a>(pub &'a Rational);

impl fmt::Display for DisplayRational<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}
