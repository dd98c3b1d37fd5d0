use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use super::{Interval, Rational};

/// Ring operations shared by every number kind the algebraic system is evaluated over.
pub trait Scalar:
    Clone + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;

    /// Exact multiplication by 1/2.
    fn half(&self) -> Self;

    fn zero() -> Self {
        Self::from_i64(0)
    }

    fn one() -> Self {
        Self::from_i64(1)
    }

    fn square(&self) -> Self {
        self.clone() * self.clone()
    }
}

/// Totally ordered scalars with a float view; the kinds verdicts are computed in.
pub trait Real: Scalar + PartialOrd {
    fn abs(&self) -> Self;
    fn to_f64(&self) -> f64;
    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn half(&self) -> Self {
        0.5 * self
    }
}

impl Real for f64 {
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(v)
    }
    fn half(&self) -> Self {
        self * &Rational::new(1, 2).expect("nonzero denominator")
    }
}

impl Real for Rational {
    fn abs(&self) -> Self {
        Rational::abs(self)
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
}

impl Scalar for Interval {
    fn from_i64(v: i64) -> Self {
        Interval::point(Rational::from_integer(v))
    }
    fn half(&self) -> Self {
        self.scale(&Rational::new(1, 2).expect("nonzero denominator"))
    }
}
