use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Field of coefficients for graph data: weights, measures, potentials and
/// function values. Exact rationals are admitted for combinatorial work;
/// anything spectral needs [`Real`].
pub trait Scalar:
    Num
    + NumAssign
    + Copy
    + PartialOrd
    + Neg<Output = Self>
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Parses a plain decimal literal (`-1.25`, `3`, `2.5e-3`) without
    /// going through binary floating point when the type is exact.
    fn from_decimal(text: &str) -> Option<Self>;

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn lossy_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        false
    }
}

/// Floating point scalars on which eigensolvers run.
pub trait Real: Scalar + Float + FloatConst {
    fn from_f64_lossy(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite f64")
    }
}

impl Scalar for f64 {
    fn from_decimal(text: &str) -> Option<Self> {
        text.trim().parse().ok().filter(|x: &f64| x.is_finite())
    }
}

impl Scalar for f32 {
    fn from_decimal(text: &str) -> Option<Self> {
        text.trim().parse().ok().filter(|x: &f32| x.is_finite())
    }
}

impl Real for f64 {}
impl Real for f32 {}

impl Scalar for Rational64 {
    fn from_decimal(text: &str) -> Option<Self> {
        parse_decimal_rational(text)
    }

    fn is_exact() -> bool {
        true
    }
}

fn parse_decimal_rational(text: &str) -> Option<Rational64> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p.trim().parse().ok()?;
        let q: i64 = q.trim().parse().ok()?;
        return (q != 0).then(|| Rational64::new(p, q));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut numer: i64 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        numer = numer.checked_mul(10)?.checked_add(i64::from(c.to_digit(10)? as u8))?;
    }
    let scale = exponent - i32::try_from(frac_part.len()).ok()?;
    let pow = 10i64.checked_pow(scale.unsigned_abs())?;
    let value = if scale >= 0 {
        Rational64::from_integer(numer.checked_mul(pow)?)
    } else {
        Rational64::new(numer, pow)
    };
    Some(if negative { -value } else { value })
}

/// Exact rational scalar used by the combinatorial routines.
pub type Exact = Rational64;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_decimal_parsing() {
        assert_eq!(Exact::from_decimal("1.25"), Some(Exact::new(5, 4)));
        assert_eq!(Exact::from_decimal("-3"), Some(Exact::from_integer(-3)));
        assert_eq!(Exact::from_decimal("2.5e-3"), Some(Exact::new(1, 400)));
        assert_eq!(Exact::from_decimal("1e2"), Some(Exact::from_integer(100)));
        assert_eq!(Exact::from_decimal(".5"), Some(Exact::new(1, 2)));
        assert_eq!(Exact::from_decimal("-5/4"), Some(Exact::new(-5, 4)));
        assert_eq!(Exact::from_decimal("1/0"), None);
        assert_eq!(Exact::from_decimal("abc"), None);
        assert_eq!(Exact::from_decimal(""), None);
    }

    #[test]
    fn float_decimal_parsing() {
        assert_eq!(f64::from_decimal("0.1"), Some(0.1));
        assert_eq!(f64::from_decimal("inf"), None);
        assert_eq!(f32::from_decimal("2"), Some(2.0));
    }
}
