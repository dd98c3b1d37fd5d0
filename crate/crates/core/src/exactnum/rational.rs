use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NumError;

/// Exact rational number in canonical form (reduced, positive denominator).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, NumError> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    pub fn from_integer(v: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(v.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// Exact value of a finite binary64 number.
    pub fn from_f64(x: f64) -> Result<Self, NumError> {
        if !x.is_finite() {
            return Err(NumError::NotRepresentable(x));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let m = BigInt::from(mantissa);
        let m = if negative { -m } else { m };
        let value = if exp >= 0 {
            BigRational::from_integer(m << exp as usize)
        } else {
            BigRational::new(m, BigInt::one() << (-exp) as usize)
        };
        Ok(Rational(value))
    }

    /// Nearest binary64 value.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self, NumError> {
        if self.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn checked_div(&self, other: &Rational) -> Result<Self, NumError> {
        if other.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &other.0))
    }

    pub fn pow(&self, exp: i32) -> Self {
        Rational(num_traits::Pow::pow(&self.0, exp))
    }

    /// Rational upper bound of `sqrt(self)`; exact when `self` is a perfect square of a dyadic.
    pub fn sqrt_upper(&self) -> Result<Self, NumError> {
        if self.is_negative() {
            return Err(NumError::Domain("square root of a negative number"));
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let mut guess = Rational::from_f64(self.to_f64().sqrt())?;
        // Nudge upward until guess^2 >= self.
        let mut step = Rational::from_f64(guess.to_f64() * 1e-15 + f64::MIN_POSITIVE)?;
        while &guess * &guess < *self {
            guess = &guess + &step;
            step = &step + &step;
        }
        Ok(guess)
    }

    /// Number of decimal digits in numerator plus denominator; a rough size gauge.
    pub fn digits(&self) -> usize {
        self.numer().to_string().len() + self.denom().to_string().len()
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Parses `p/q`, integers, and decimals with an optional exponent (`-58.1`, `1e-11`), all exactly.
impl FromStr for Rational {
    type Err = NumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() {
            return Err(NumError::Parse(s.to_string()));
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p
                .trim()
                .parse()
                .map_err(|_| NumError::Parse(s.to_string()))?;
            let q: BigInt = q
                .trim()
                .parse()
                .map_err(|_| NumError::Parse(s.to_string()))?;
            return Rational::new(p, q);
        }
        let (mantissa, exponent) = match t.find(['e', 'E']) {
            Some(pos) => {
                let e: i64 = t[pos + 1..]
                    .parse()
                    .map_err(|_| NumError::Parse(s.to_string()))?;
                (&t[..pos], e)
            }
            None => (t, 0),
        };
        let (sign, body) = match mantissa.strip_prefix('-') {
            Some(rest) => (Sign::Minus, rest),
            None => (Sign::Plus, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(NumError::Parse(s.to_string()));
        }
        if !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
        {
            return Err(NumError::Parse(s.to_string()));
        }
        let digits = format!("{int_part}{frac_part}");
        let magnitude: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| NumError::Parse(s.to_string()))?
        };
        let numer = if sign == Sign::Minus {
            -magnitude
        } else {
            magnitude
        };
        let scale = exponent - frac_part.len() as i64;
        if scale.unsigned_abs() > 100_000 {
            return Err(NumError::Parse(s.to_string()));
        }
        let ten = BigInt::from(10);
        let value = if scale >= 0 {
            BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Rational(value))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_integer(v)
    }
}

macro_rules! forward_binop {
    ($imp:ident, $method:ident) => {
        impl $imp<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($imp::$method(self.0, rhs.0))
            }
        }
        impl<'a> $imp<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational($imp::$method(self.0, &rhs.0))
            }
        }
        impl<'a> $imp<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational($imp::$method(&self.0, rhs.0))
            }
        }
        impl<'a, 'b> $imp<&'b Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'b Rational) -> Rational {
                Rational($imp::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

/// Panics on a zero divisor; use [`Rational::checked_div`] where the divisor is data-dependent.
macro_rules! forward_div {
    ($lhs:ty, $rhs:ty) => {
        impl Div<$rhs> for $lhs {
            type Output = Rational;
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn div(self, rhs: $rhs) -> Rational {
                assert!(!rhs.is_zero(), "rational division by zero");
                Rational(&self.0 / &rhs.0)
            }
        }
    };
}

forward_div!(Rational, Rational);
forward_div!(Rational, &Rational);
forward_div!(&Rational, Rational);
forward_div!(&Rational, &Rational);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl<'a> Neg for &'a Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        self.0 *= &rhs.0;
    }
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        self.0 == BigRational::from_integer(BigInt::from(*other))
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0
            .partial_cmp(&BigRational::from_integer(BigInt::from(*other)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn float_conversion_examples() {
        assert_eq!(Rational::from_f64(0.5).unwrap(), q("1/2"));
        assert_eq!(Rational::from_f64(0.0).unwrap().to_string(), "0");
        assert_eq!(
            Rational::from_f64(-58.103467416049845).unwrap(),
            q("-8177336068870495/140737488355328")
        );
        assert_eq!(
            Rational::from_f64(-58.1).unwrap(),
            q("-8176848073444557/140737488355328")
        );
        assert!(Rational::from_f64(f64::NAN).is_err());
        assert!(Rational::from_f64(f64::INFINITY).is_err());
    }

    #[test]
    fn subnormal_and_extreme_floats_are_exact() {
        for x in [
            f64::MIN_POSITIVE,
            5e-324,
            f64::MAX,
            -f64::MAX,
            1e300,
            -3.25e-310,
        ] {
            let r = Rational::from_f64(x).unwrap();
            assert_eq!(r.to_f64(), x);
        }
    }

    #[test]
    fn parse_forms() {
        assert_eq!(q("6/4").to_string(), "3/2");
        assert_eq!(q("-7").to_string(), "-7");
        assert_eq!(q("-58.1"), q("-581/10"));
        assert_eq!(q("1e-11"), q("1/100000000000"));
        assert_eq!(q("2.5E2"), q("250"));
        assert_eq!(q(".5"), q("1/2"));
        assert_eq!(q("3/-6"), q("-1/2"));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
        assert!("1.2.3".parse::<Rational>().is_err());
    }

    #[test]
    fn sqrt_upper_bounds() {
        for s in ["2", "1/3", "1e-24", "123456789/7"] {
            let v = q(s);
            let r = v.sqrt_upper().unwrap();
            assert!(&r * &r >= v);
            assert!((r.to_f64() - v.to_f64().sqrt()).abs() <= 1e-12 * v.to_f64().sqrt());
        }
        assert_eq!(q("0").sqrt_upper().unwrap(), q("0"));
    }

    #[test]
    fn serde_uses_string_form() {
        let v = q("-22/7");
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "\"-22/7\"");
        let back: Rational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
