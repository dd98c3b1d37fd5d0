use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::{NumError, Rational};

/// Closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self, NumError> {
        if lo > hi {
            return Err(NumError::EmptyInterval);
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(v: Rational) -> Self {
        Interval {
            lo: v.clone(),
            hi: v,
        }
    }

    /// `[center - radius, center + radius]`.
    pub fn ball(center: &Rational, radius: &Rational) -> Result<Self, NumError> {
        if radius.is_negative() {
            return Err(NumError::Domain("negative radius"));
        }
        Ok(Interval {
            lo: center - radius,
            hi: center + radius,
        })
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// `max |x|` over the interval.
    pub fn mag(&self) -> Rational {
        self.lo.abs().max(self.hi.abs())
    }

    /// `min |x|` over the interval.
    pub fn mig(&self) -> Rational {
        if self.contains_zero() {
            Rational::zero()
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: (&self.lo).min(&other.lo).clone(),
            hi: (&self.hi).max(&other.hi).clone(),
        }
    }

    pub fn recip(&self) -> Result<Interval, NumError> {
        if self.contains_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(Interval {
            lo: self.hi.recip()?,
            hi: self.lo.recip()?,
        })
    }

    /// Division; errors when the divisor contains zero.
    pub fn checked_div(&self, other: &Interval) -> Result<Interval, NumError> {
        Ok(self * &other.recip()?)
    }

    pub fn scale(&self, k: &Rational) -> Interval {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }
}

/// `[min(values) - radius, max(values) + radius]`.
pub fn interval_hull(values: &[Rational], radius: &Rational) -> Result<Interval, NumError> {
    if radius.is_negative() {
        return Err(NumError::Domain("negative radius"));
    }
    let first = values.first().ok_or(NumError::EmptyInput)?;
    let (mut lo, mut hi) = (first, first);
    for v in &values[1..] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(Interval {
        lo: lo - radius,
        hi: hi + radius,
    })
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl<'a, 'b> Add<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn add(self, rhs: &'b Interval) -> Interval {
        Interval {
            lo: &self.lo + &rhs.lo,
            hi: &self.hi + &rhs.hi,
        }
    }
}

impl<'a, 'b> Sub<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn sub(self, rhs: &'b Interval) -> Interval {
        Interval {
            lo: &self.lo - &rhs.hi,
            hi: &self.hi - &rhs.lo,
        }
    }
}

impl<'a, 'b> Mul<&'b Interval> for &'a Interval {
    type Output = Interval;
    fn mul(self, rhs: &'b Interval) -> Interval {
        if self.lo == self.hi {
            return rhs.scale(&self.lo);
        }
        if rhs.lo == rhs.hi {
            return self.scale(&rhs.lo);
        }
        let products = [
            &self.lo * &rhs.lo,
            &self.lo * &rhs.hi,
            &self.hi * &rhs.lo,
            &self.hi * &rhs.hi,
        ];
        let mut lo = &products[0];
        let mut hi = &products[0];
        for p in &products[1..] {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        Interval {
            lo: lo.clone(),
            hi: hi.clone(),
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        &self + &rhs
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        &self - &rhs
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        &self * &rhs
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn iv(a: &str, b: &str) -> Interval {
        Interval::new(q(a), q(b)).unwrap()
    }

    #[test]
    fn hull_examples() {
        assert_eq!(
            interval_hull(&[q("1"), q("3")], &q("0")).unwrap(),
            iv("1", "3")
        );
        assert_eq!(interval_hull(&[q("0")], &q("1")).unwrap(), iv("-1", "1"));
        assert_eq!(
            interval_hull(&[q("-2"), q("5")], &q("1/2")).unwrap(),
            iv("-5/2", "11/2")
        );
        assert!(matches!(
            interval_hull(&[], &q("0")),
            Err(NumError::EmptyInput)
        ));
        assert!(interval_hull(&[q("1")], &q("-1")).is_err());
    }

    #[test]
    fn inverted_bounds_rejected() {
        assert!(Interval::new(q("2"), q("1")).is_err());
    }

    #[test]
    fn division_through_zero_is_an_error() {
        let x = iv("1", "2");
        assert!(x.checked_div(&iv("-1", "1")).is_err());
        assert!(x.checked_div(&iv("0", "1")).is_err());
        assert_eq!(x.checked_div(&iv("2", "4")).unwrap(), iv("1/4", "1"));
    }

    #[test]
    fn multiplication_sign_cases() {
        assert_eq!(&iv("-2", "3") * &iv("-5", "4"), iv("-15", "12"));
        assert_eq!(&iv("-2", "-1") * &iv("3", "4"), iv("-8", "-3"));
        assert_eq!(&iv("0", "0") * &iv("-3", "4"), iv("0", "0"));
    }

    #[test]
    fn magnitudes() {
        let x = iv("-3", "2");
        assert_eq!(x.mag(), q("3"));
        assert_eq!(x.mig(), q("0"));
        assert_eq!(iv("2", "5").mig(), q("2"));
    }
}
