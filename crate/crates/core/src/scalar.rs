//! Tagged scalar: an exact rational or a double.
//!
//! Arithmetic between two exact values stays exact; any float operand
//! promotes the result to float. Nothing is ever converted the other way.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Exact,
    Float,
}

impl ScalarKind {
    /// Kind of a combination: exact only if both sides are exact.
    pub fn join(self, other: ScalarKind) -> ScalarKind {
        if self == ScalarKind::Exact && other == ScalarKind::Exact {
            ScalarKind::Exact
        } else {
            ScalarKind::Float
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn ratio(num: i64, den: i64) -> Scalar {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn int(v: i64) -> Scalar {
        Scalar::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn zero(kind: ScalarKind) -> Scalar {
        match kind {
            ScalarKind::Exact => Scalar::Exact(BigRational::zero()),
            ScalarKind::Float => Scalar::Float(0.0),
        }
    }

    pub fn one(kind: ScalarKind) -> Scalar {
        match kind {
            ScalarKind::Exact => Scalar::Exact(BigRational::one()),
            ScalarKind::Float => Scalar::Float(1.0),
        }
    }

    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::Exact(_) => ScalarKind::Exact,
            Scalar::Float(_) => ScalarKind::Float,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Scalar::Float(f) => *f,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Converts to the requested kind. Float to exact is refused.
    pub fn to_kind(&self, kind: ScalarKind) -> Result<Scalar> {
        match (self, kind) {
            (Scalar::Exact(_), ScalarKind::Exact) | (Scalar::Float(_), ScalarKind::Float) => {
                Ok(self.clone())
            }
            (Scalar::Exact(r), ScalarKind::Float) => {
                Ok(Scalar::Float(r.to_f64().unwrap_or(f64::NAN)))
            }
            (Scalar::Float(_), ScalarKind::Exact) => Err(Error::WrongMode(
                "float values are never converted to exact rationals".into(),
            )),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Float(f) => *f == 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Scalar::Exact(_) => true,
            Scalar::Float(f) => f.is_finite(),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Float(f) => Scalar::Float(f.abs()),
        }
    }

    /// `self < -tol` for floats, `self < 0` exactly for rationals.
    pub fn is_negative_beyond(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(r) => r.is_negative(),
            Scalar::Float(f) => *f < -tol,
        }
    }

    /// `|self - other| > tol` for floats, `self != other` for two exact values.
    pub fn differs_from(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a != b,
            _ => (self.to_f64() - other.to_f64()).abs() > tol,
        }
    }

    /// Parses `"p/q"` or `"p"` as an exact rational.
    pub fn parse_rational(text: &str) -> Result<Scalar> {
        let text = text.trim();
        let (num, den) = match text.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (text, "1"),
        };
        let num: BigInt = num
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational numerator in {text:?}")))?;
        let den: BigInt = den
            .parse()
            .map_err(|_| Error::Parse(format!("bad rational denominator in {text:?}")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        Ok(Scalar::Exact(BigRational::new(num, den)))
    }

    /// Parses a decimal literal such as `0.01` or `1e-3` (or `p/q`) into an exact rational.
    pub fn parse_decimal(text: &str) -> Result<Scalar> {
        let text = text.trim();
        if text.contains('/') {
            return Scalar::parse_rational(text);
        }
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => {
                let exp: i32 = text[pos + 1..]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in {text:?}")))?;
                (&text[..pos], exp)
            }
            None => (text, 0),
        };
        let (negative, mantissa) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty()
            || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
        {
            return Err(Error::Parse(format!("bad decimal {text:?}")));
        }
        let digits: BigInt = format!("{int_part}{frac_part}0")
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad decimal {text:?}")))?
            / BigInt::from(10);
        let scale = exponent - frac_part.len() as i32;
        let ten = BigInt::from(10);
        let mut value = BigRational::from_integer(digits);
        if scale >= 0 {
            value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
        } else {
            value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
        }
        if negative {
            value = -value;
        }
        Ok(Scalar::Exact(value))
    }
}

fn combine(
    a: &Scalar,
    b: &Scalar,
    exact: impl Fn(&BigRational, &BigRational) -> BigRational,
    float: impl Fn(f64, f64) -> f64,
) -> Scalar {
    match (a, b) {
        (Scalar::Exact(x), Scalar::Exact(y)) => Scalar::Exact(exact(x, y)),
        _ => Scalar::Float(float(a.to_f64(), b.to_f64())),
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        combine(self, rhs, |x, y| x + y, |x, y| x + y)
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        combine(self, rhs, |x, y| x - y, |x, y| x - y)
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        combine(self, rhs, |x, y| x * y, |x, y| x * y)
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        &self + &rhs
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Float(f) => Scalar::Float(-f),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<BigRational> for Scalar {
    fn from(v: BigRational) -> Self {
        Scalar::Exact(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}

/// Floats serialize as JSON numbers, exact values as `"p/q"` (or `"p"`) strings.
impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(r) => serializer.serialize_str(&r.to_string()),
            Scalar::Float(v) => serializer.serialize_f64(*v),
        }
    }
}

/// Common kind of a collection; `None` if it mixes exact and float values.
pub fn homogeneous_kind<'a>(values: impl IntoIterator<Item = &'a Scalar>) -> Option<ScalarKind> {
    let mut kind = None;
    for v in values {
        match kind {
            None => kind = Some(v.kind()),
            Some(k) if k != v.kind() => return None,
            _ => {}
        }
    }
    kind
}

/// Joint kind of a collection (exact iff every value is exact).
pub fn joint_kind<'a>(values: impl IntoIterator<Item = &'a Scalar>) -> ScalarKind {
    values
        .into_iter()
        .fold(ScalarKind::Exact, |k, v| k.join(v.kind()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_arithmetic_stays_exact() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::ratio(2, 3);
        assert_eq!(&a + &b, Scalar::int(1));
        assert!((&a * &b).is_exact());
    }

    #[test]
    fn float_operand_promotes() {
        let a = Scalar::ratio(1, 2);
        let b = Scalar::Float(0.25);
        assert_eq!(&a + &b, Scalar::Float(0.75));
    }

    #[test]
    fn rationals_are_normalized() {
        let r = Scalar::parse_rational("6/-4").unwrap();
        let q = r.as_rational().unwrap();
        assert_eq!(q.numer(), &BigInt::from(-3));
        assert_eq!(q.denom(), &BigInt::from(2));
        assert!(Scalar::parse_rational("1/0").is_err());
    }

    #[test]
    fn decimal_literals_parse_exactly() {
        assert_eq!(Scalar::parse_decimal("0.01").unwrap(), Scalar::ratio(1, 100));
        assert_eq!(Scalar::parse_decimal("1e-3").unwrap(), Scalar::ratio(1, 1000));
        assert_eq!(Scalar::parse_decimal("2.5E1").unwrap(), Scalar::int(25));
        assert_eq!(Scalar::parse_decimal("-.5").unwrap(), Scalar::ratio(-1, 2));
        assert_eq!(Scalar::parse_decimal("3/4").unwrap(), Scalar::ratio(3, 4));
        assert!(Scalar::parse_decimal("abc").is_err());
    }

    #[test]
    fn float_never_becomes_exact() {
        assert!(Scalar::Float(0.5).to_kind(ScalarKind::Exact).is_err());
        assert_eq!(
            Scalar::ratio(1, 4).to_kind(ScalarKind::Float).unwrap(),
            Scalar::Float(0.25)
        );
    }
}
