use std::ops::{Add, Mul, Neg, Sub};

use super::Scalar;

/// Forward-mode first-order dual number over any [`Scalar`].
///
/// An empty gradient stands for a constant, so constants cost no allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<S> {
    pub value: S,
    pub grad: Vec<S>,
}

impl<S: Scalar> Dual<S> {
    pub fn constant(value: S) -> Self {
        Dual {
            value,
            grad: Vec::new(),
        }
    }

    /// Independent variable `index` of `dim`.
    pub fn variable(value: S, index: usize, dim: usize) -> Self {
        let mut grad = vec![S::zero(); dim];
        grad[index] = S::one();
        Dual { value, grad }
    }

    /// Gradient entry `i`, zero for constants.
    pub fn partial(&self, i: usize) -> S {
        self.grad.get(i).cloned().unwrap_or_else(S::zero)
    }

    fn zip(a: Vec<S>, b: Vec<S>, f: impl Fn(S, S) -> S) -> Vec<S> {
        match (a.is_empty(), b.is_empty()) {
            (true, true) => Vec::new(),
            (false, true) => a.into_iter().map(|x| f(x, S::zero())).collect(),
            (true, false) => b.into_iter().map(|y| f(S::zero(), y)).collect(),
            (false, false) => a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect(),
        }
    }
}

impl<S: Scalar> Add for Dual<S> {
    type Output = Dual<S>;
    fn add(self, rhs: Dual<S>) -> Dual<S> {
        Dual {
            value: self.value + rhs.value,
            grad: Dual::zip(self.grad, rhs.grad, |a, b| a + b),
        }
    }
}

impl<S: Scalar> Sub for Dual<S> {
    type Output = Dual<S>;
    fn sub(self, rhs: Dual<S>) -> Dual<S> {
        Dual {
            value: self.value - rhs.value,
            grad: Dual::zip(self.grad, rhs.grad, |a, b| a - b),
        }
    }
}

impl<S: Scalar> Mul for Dual<S> {
    type Output = Dual<S>;
    fn mul(self, rhs: Dual<S>) -> Dual<S> {
        let (u, v) = (self.value, rhs.value);
        let grad = match (self.grad.is_empty(), rhs.grad.is_empty()) {
            (true, true) => Vec::new(),
            (false, true) => self.grad.into_iter().map(|a| a * v.clone()).collect(),
            (true, false) => rhs.grad.into_iter().map(|b| u.clone() * b).collect(),
            (false, false) => self
                .grad
                .into_iter()
                .zip(rhs.grad)
                .map(|(a, b)| a * v.clone() + u.clone() * b)
                .collect(),
        };
        Dual { value: u * v, grad }
    }
}

impl<S: Scalar> Neg for Dual<S> {
    type Output = Dual<S>;
    fn neg(self) -> Dual<S> {
        Dual {
            value: -self.value,
            grad: self.grad.into_iter().map(|a| -a).collect(),
        }
    }
}

impl<S: Scalar> Scalar for Dual<S> {
    fn from_i64(v: i64) -> Self {
        Dual::constant(S::from_i64(v))
    }
    fn half(&self) -> Self {
        Dual {
            value: self.value.half(),
            grad: self.grad.iter().map(|a| a.half()).collect(),
        }
    }
}
