//! Scalar field abstraction shared by the floating-point and exact paths.
//!
//! Every criterion is generic over [`Scalar`]. With `f64` the arithmetic is
//! ordinary floating point; with [`Q`] (arbitrary-precision rationals) the
//! induced ∞/1 norms, matrix measures, leading minors and inequality margins
//! are all computed exactly, so boundary cases such as `tau = 1/96` are
//! decided without rounding.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Q = BigRational;

pub trait Scalar:
    Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + Signed + FromPrimitive + ToPrimitive + 'static
{
    /// True for exact arithmetic; exact fields use zero tolerances.
    const EXACT: bool;

    fn is_finite_value(&self) -> bool;

    /// Report rendering.
    fn pretty(&self) -> String;

    /// Lossy conversion used for the 2-norm path and for simulation.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Conversion from `f64`; exact for rationals (the binary value is kept).
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every scalar")
    }

    /// Strictly greater than zero. `Signed::is_positive` on floats reads the
    /// sign bit and accepts `0.0`.
    fn gt_zero(&self) -> bool {
        *self > Self::zero()
    }

    /// Strictly less than zero.
    fn lt_zero(&self) -> bool {
        *self < Self::zero()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }

    fn pretty(&self) -> String {
        format!("{self}")
    }
}

impl Scalar for Q {
    const EXACT: bool = true;

    fn is_finite_value(&self) -> bool {
        true
    }

    fn pretty(&self) -> String {
        format_rational(self)
    }
}

/// Parse a decimal literal (`-12.5e-3`) or a fraction (`1/96`) into an exact rational.
pub fn parse_rational(text: &str) -> Option<Q> {
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_decimal(num)?;
        let d = parse_decimal(den)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    parse_decimal(s)
}

fn parse_decimal(text: &str) -> Option<Q> {
    let s = text.trim();
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    if exponent.abs() > 400 {
        return None;
    }
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Q::from_integer(digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac_part.len() as i32;
    let ten = Q::from_integer(BigInt::from(10));
    if scale >= 0 {
        value *= num_traits::pow(ten, scale as usize);
    } else {
        value /= num_traits::pow(ten, (-scale) as usize);
    }
    Some(if negative { -value } else { value })
}

/// True when the rational has a finite decimal expansion.
pub fn is_terminating(q: &Q) -> bool {
    let mut d = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
    }
    while (&d % &five).is_zero() {
        d /= &five;
    }
    d.is_one()
}

/// Exact decimal expansion of a terminating rational.
fn exact_decimal(q: &Q) -> String {
    let negative = q.lt_zero();
    let q = q.abs();
    let mut digits = 0usize;
    let mut scaled = q.clone();
    let ten = Q::from_integer(BigInt::from(10));
    while !scaled.is_integer() {
        scaled *= &ten;
        digits += 1;
    }
    let int = scaled.to_integer().to_string();
    let body = if digits == 0 {
        int
    } else {
        let padded = format!("{:0>width$}", int, width = digits + 1);
        let (a, b) = padded.split_at(padded.len() - digits);
        format!("{a}.{b}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Human-readable rendering: exact decimals when the expansion terminates
/// in a few digits, otherwise 12 decimals followed by the fraction.
pub fn format_rational(q: &Q) -> String {
    if is_terminating(q) {
        let s = exact_decimal(q);
        if s.len() <= 24 {
            return s;
        }
    }
    let approx = q.to_f64().unwrap_or(f64::NAN);
    if q.denom().to_string().len() > 12 {
        return format!("{approx}");
    }
    format!("{approx:.12} ({q})")
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}
