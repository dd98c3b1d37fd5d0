//! Exact correction of a numerically found configuration.
//!
//! The left interface and the inner interfaces `1..=N-2` are made exact by
//! solving, in order, the mass relation for the interface speed, the first
//! momentum relation for `delta` of the region to the right, and the second
//! momentum relation for `eps'` of that region. Each solved value is used by
//! every later formula, so the corrected relations hold with residual exactly 0.

use thiserror::Error;

use crate::exactnum::{NumError, Rational};
use crate::fan_model::{FanConfiguration, ModelError};
use crate::system::{interface_label, sides, Component, Interface, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrectionError {
    #[error("{} density collision", describe(.0))]
    DensityCollision(Interface),
    #[error("vanishing density to the right of the {} interface", describe(.0))]
    ZeroDensity(Interface),
    #[error(transparent)]
    Number(#[from] NumError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn describe(i: &Interface) -> String {
    match i {
        Interface::Left => "left interface".into(),
        Interface::Right => "right interface".into(),
        Interface::Inner(k) => format!("interface {k}|{}", k + 1),
    }
}

/// Solve one jump relation across `iface` for its designated unknown:
/// the speed (mass), `delta` of the right side (first momentum) or `eps'` of
/// the right side (second momentum). Other inputs are taken as given.
pub fn closed_form_solve(
    component: Component,
    iface: Interface,
    l: &Side<Rational>,
    r: &Side<Rational>,
    nu: &Rational,
) -> Result<Rational, CorrectionError> {
    let (a, b) = (&l.state, &r.state);
    match component {
        Component::Mass => {
            let den = &a.rho - &b.rho;
            let num = &a.rho * &a.beta - &b.rho * &b.beta;
            num.checked_div(&den)
                .map_err(|_| CorrectionError::DensityCollision(iface))
        }
        Component::Momentum1 => {
            let num = &a.rho * &a.delta - nu * (&a.rho * &a.alpha - &b.rho * &b.alpha);
            num.checked_div(&b.rho)
                .map_err(|_| CorrectionError::ZeroDensity(iface))
        }
        Component::Momentum2 => {
            let two = Rational::from_integer(2);
            let num = -(&a.rho * &a.gamma)
                + &b.rho * &b.gamma
                + &a.rho * &a.rho * &l.deps
                + &a.rho * &a.c / &two
                - &b.rho * &b.c / &two
                - nu * (&a.rho * &a.beta - &b.rho * &b.beta);
            num.checked_div(&(&b.rho * &b.rho))
                .map_err(|_| CorrectionError::ZeroDensity(iface))
        }
    }
}

/// Correct an exact configuration in place of its float origin.
pub fn correct_exact(
    cfg: &FanConfiguration<Rational>,
) -> Result<FanConfiguration<Rational>, CorrectionError> {
    cfg.check_shape()?;
    let n = cfg.n_waves();
    let mut out = cfg.clone();
    // The left interface, then inner interfaces 1..=N-2.
    for k in 0..(n - 1).max(1) {
        let iface = interface_label(k, n);
        let sd = sides(&out);
        let nu = closed_form_solve(Component::Mass, iface, &sd[k], &sd[k + 1], &out.speeds[k])?;
        out.speeds[k] = nu.clone();
        let sd = sides(&out);
        let delta = closed_form_solve(Component::Momentum1, iface, &sd[k], &sd[k + 1], &nu)?;
        out.states[k].delta = delta;
        let sd = sides(&out);
        let deps = closed_form_solve(Component::Momentum2, iface, &sd[k], &sd[k + 1], &nu)?;
        out.thermo.deps[k] = deps;
    }
    Ok(out)
}

/// Convert every float exactly, then correct.
pub fn correct(
    tilde: &FanConfiguration<f64>,
) -> Result<FanConfiguration<Rational>, CorrectionError> {
    correct_exact(&tilde.to_rational()?)
}
