//! Riemann data, fan partitions and candidate fan subsolutions.
//!
//! Every container is generic over the scalar kind so the same configuration can
//! be held as floats during search and as exact rationals for verification.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::{Rational, Real, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("density {name} must be positive")]
    NonPositiveDensity { name: String },
    #[error("at least one wave region is required")]
    NoRegions,
    #[error("expected {expected} {what}, found {found}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("interface speeds must be strictly increasing (speed {index} does not exceed its predecessor)")]
    Unordered { index: usize },
    #[error("time must be positive")]
    NonPositiveTime,
}

/// Left and right constant states of the Riemann problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannDatum<S> {
    pub rho_minus: S,
    pub rho_plus: S,
    pub v_minus: [S; 2],
    pub v_plus: [S; 2],
}

impl<S: Scalar> RiemannDatum<S> {
    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> RiemannDatum<T> {
        RiemannDatum {
            rho_minus: f(&self.rho_minus),
            rho_plus: f(&self.rho_plus),
            v_minus: [f(&self.v_minus[0]), f(&self.v_minus[1])],
            v_plus: [f(&self.v_plus[0]), f(&self.v_plus[1])],
        }
    }
}

impl<S: Real> RiemannDatum<S> {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.rho_minus > S::zero()) {
            return Err(ModelError::NonPositiveDensity {
                name: "rho_minus".into(),
            });
        }
        if !(self.rho_plus > S::zero()) {
            return Err(ModelError::NonPositiveDensity {
                name: "rho_plus".into(),
            });
        }
        Ok(())
    }

    /// Equal densities and equal normal velocities: a compressible vortex sheet.
    pub fn is_contact(&self) -> bool {
        self.rho_minus == self.rho_plus && self.v_minus[1] == self.v_plus[1]
    }
}

/// Constant state of one wave region: density, velocity `(alpha, beta)`,
/// traceless symmetric matrix `[[gamma, delta], [delta, -gamma]]` and kinetic bound `c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveState<S> {
    pub rho: S,
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
    pub delta: S,
    #[serde(rename = "C")]
    pub c: S,
}

impl<S: Scalar> WaveState<S> {
    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> WaveState<T> {
        WaveState {
            rho: f(&self.rho),
            alpha: f(&self.alpha),
            beta: f(&self.beta),
            gamma: f(&self.gamma),
            delta: f(&self.delta),
            c: f(&self.c),
        }
    }
}

/// Internal energy values and derivatives standing in for `eps(rho)` and `eps'(rho)`
/// at the outer states and in each region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoTable<S> {
    pub eps_minus: S,
    pub eps_plus: S,
    pub deps_minus: S,
    pub deps_plus: S,
    pub eps: Vec<S>,
    pub deps: Vec<S>,
}

impl<S: Scalar> ThermoTable<S> {
    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> ThermoTable<T> {
        ThermoTable {
            eps_minus: f(&self.eps_minus),
            eps_plus: f(&self.eps_plus),
            deps_minus: f(&self.deps_minus),
            deps_plus: f(&self.deps_plus),
            eps: self.eps.iter().map(&f).collect(),
            deps: self.deps.iter().map(&f).collect(),
        }
    }
}

/// A candidate fan subsolution with `N = states.len()` wave regions.
///
/// `speeds[0]` is the left outer speed and `speeds[N]` the right one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanConfiguration<S> {
    pub datum: RiemannDatum<S>,
    pub speeds: Vec<S>,
    pub states: Vec<WaveState<S>>,
    pub thermo: ThermoTable<S>,
}

impl<S: Scalar> FanConfiguration<S> {
    pub fn n_waves(&self) -> usize {
        self.states.len()
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> FanConfiguration<T> {
        FanConfiguration {
            datum: self.datum.map(&f),
            speeds: self.speeds.iter().map(&f).collect(),
            states: self.states.iter().map(|s| s.map(&f)).collect(),
            thermo: self.thermo.map(&f),
        }
    }

    /// Array lengths agree with `N >= 1`.
    pub fn check_shape(&self) -> Result<(), ModelError> {
        let n = self.states.len();
        if n == 0 {
            return Err(ModelError::NoRegions);
        }
        let check = |what, found| {
            if found == n {
                Ok(())
            } else {
                Err(ModelError::Length {
                    what,
                    expected: n,
                    found,
                })
            }
        };
        if self.speeds.len() != n + 1 {
            return Err(ModelError::Length {
                what: "speeds",
                expected: n + 1,
                found: self.speeds.len(),
            });
        }
        check("energy values", self.thermo.eps.len())?;
        check("energy derivatives", self.thermo.deps.len())
    }
}

impl<S: Real> FanConfiguration<S> {
    /// Shape, positive densities and strictly increasing speeds.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.check_shape()?;
        self.datum.validate()?;
        for (i, s) in self.states.iter().enumerate() {
            if !(s.rho > S::zero()) {
                return Err(ModelError::NonPositiveDensity {
                    name: format!("rho_{}", i + 1),
                });
            }
        }
        for k in 1..self.speeds.len() {
            if !(self.speeds[k] > self.speeds[k - 1]) {
                return Err(ModelError::Unordered { index: k });
            }
        }
        Ok(())
    }
}

impl FanConfiguration<Rational> {
    pub fn to_f64(&self) -> FanConfiguration<f64> {
        self.map(Rational::to_f64)
    }
}

impl FanConfiguration<f64> {
    /// Exact rational image of every entry; fails on non-finite values.
    pub fn to_rational(&self) -> Result<FanConfiguration<Rational>, crate::exactnum::NumError> {
        let err = std::cell::RefCell::new(None);
        let out = self.map(|x| {
            Rational::from_f64(*x).unwrap_or_else(|e| {
                err.borrow_mut().get_or_insert(e);
                Rational::zero()
            })
        });
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }
}

/// Symmetric 2x2 matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressMatrix<S> {
    pub r11: S,
    pub r12: S,
    pub r22: S,
}

impl<S: Scalar> StressMatrix<S> {
    pub fn trace(&self) -> S {
        self.r11.clone() + self.r22.clone()
    }

    pub fn determinant(&self) -> S {
        self.r11.clone() * self.r22.clone() - self.r12.square()
    }
}

impl<S: Real> StressMatrix<S> {
    pub fn is_positive_definite(&self) -> bool {
        self.trace() > S::zero() && self.determinant() > S::zero()
    }
}

/// Reynolds stress `R = C/2 Id + u - v (x) v` of a region.
pub fn reynolds_stress<S: Scalar>(s: &WaveState<S>) -> StressMatrix<S> {
    let half_c = s.c.half();
    StressMatrix {
        r11: s.gamma.clone() - s.alpha.square() + half_c.clone(),
        r12: s.delta.clone() - s.alpha.clone() * s.beta.clone(),
        r22: -s.gamma.clone() - s.beta.square() + half_c,
    }
}

/// The state an exact solution takes: `u = v (x) v - |v|^2/2 Id`, `C = |v|^2`.
pub fn ghost_state<S: Real>(v: &[S; 2], rho: &S) -> Result<WaveState<S>, ModelError> {
    if !(*rho > S::zero()) {
        return Err(ModelError::NonPositiveDensity { name: "rho".into() });
    }
    Ok(ghost_unchecked(v, rho))
}

pub(crate) fn ghost_unchecked<S: Scalar>(v: &[S; 2], rho: &S) -> WaveState<S> {
    let [v1, v2] = v;
    WaveState {
        rho: rho.clone(),
        alpha: v1.clone(),
        beta: v2.clone(),
        gamma: (v1.square() - v2.square()).half(),
        delta: v1.clone() * v2.clone(),
        c: v1.square() + v2.square(),
    }
}

/// Region of the fan partition at a space-time point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Minus,
    /// 1-based wave region index.
    Wave(usize),
    Plus,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Minus => write!(f, "-"),
            Region::Wave(i) => write!(f, "{i}"),
            Region::Plus => write!(f, "+"),
        }
    }
}

/// Region containing `(x2, t)`. Points on an interface line belong to the region below it.
pub fn region_of<S: Real>(x2: &S, t: &S, speeds: &[S]) -> Result<Region, ModelError> {
    if !(*t > S::zero()) {
        return Err(ModelError::NonPositiveTime);
    }
    if speeds.len() < 2 {
        return Err(ModelError::NoRegions);
    }
    for k in 1..speeds.len() {
        if !(speeds[k] > speeds[k - 1]) {
            return Err(ModelError::Unordered { index: k });
        }
    }
    let n = speeds.len() - 1;
    for (k, nu) in speeds.iter().enumerate() {
        if *x2 <= nu.clone() * t.clone() {
            return Ok(if k == 0 {
                Region::Minus
            } else {
                Region::Wave(k)
            });
        }
    }
    debug_assert!(n >= 1);
    Ok(Region::Plus)
}
