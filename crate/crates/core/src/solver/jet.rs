//! Second-order forward-mode numbers: value, gradient and dense Hessian.

use std::ops::{Add, Mul, Neg, Sub};

use crate::exactnum::Scalar;

/// Empty `grad` (and `hess`) marks a constant.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `dim x dim`.
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            grad: Vec::new(),
            hess: Vec::new(),
        }
    }

    /// `scale * z_index` as a function of `z`.
    pub fn scaled_variable(z: f64, scale: f64, index: usize, dim: usize) -> Self {
        let mut grad = vec![0.0; dim];
        grad[index] = scale;
        Jet2 {
            value: z * scale,
            grad,
            hess: vec![0.0; dim * dim],
        }
    }

    fn scaled(self, c: f64) -> Self {
        Jet2 {
            value: self.value * c,
            grad: self.grad.into_iter().map(|g| g * c).collect(),
            hess: self.hess.into_iter().map(|h| h * c).collect(),
        }
    }

    fn combine(a: Vec<f64>, b: Vec<f64>, sign: f64) -> Vec<f64> {
        match (a.is_empty(), b.is_empty()) {
            (true, true) => Vec::new(),
            (false, true) => a,
            (true, false) => b.into_iter().map(|y| sign * y).collect(),
            (false, false) => a.into_iter().zip(b).map(|(x, y)| x + sign * y).collect(),
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            grad: Jet2::combine(self.grad, rhs.grad, 1.0),
            hess: Jet2::combine(self.hess, rhs.hess, 1.0),
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            grad: Jet2::combine(self.grad, rhs.grad, -1.0),
            hess: Jet2::combine(self.hess, rhs.hess, -1.0),
        }
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        match (self.grad.is_empty(), rhs.grad.is_empty()) {
            (true, true) => Jet2::constant(self.value * rhs.value),
            (false, true) => self.scaled(rhs.value),
            (true, false) => rhs.scaled(self.value),
            (false, false) => {
                let (u, v) = (self.value, rhs.value);
                let n = self.grad.len();
                let mut hess = Vec::with_capacity(n * n);
                for i in 0..n {
                    let (gi, hi) = (self.grad[i], rhs.grad[i]);
                    for j in 0..n {
                        let k = i * n + j;
                        hess.push(
                            u * rhs.hess[k]
                                + v * self.hess[k]
                                + gi * rhs.grad[j]
                                + hi * self.grad[j],
                        );
                    }
                }
                let grad = self
                    .grad
                    .iter()
                    .zip(&rhs.grad)
                    .map(|(a, b)| a * v + u * b)
                    .collect();
                Jet2 {
                    value: u * v,
                    grad,
                    hess,
                }
            }
        }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scaled(-1.0)
    }
}

impl Scalar for Jet2 {
    fn from_i64(v: i64) -> Self {
        Jet2::constant(v as f64)
    }
    fn half(&self) -> Self {
        self.clone().scaled(0.5)
    }
}
