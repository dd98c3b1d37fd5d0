//! Existence certificate for an exact root near a corrected configuration.
//!
//! The six relations left approximate by correction (the last inner interface
//! and the right interface) are viewed as a map `Gamma: R^6 -> R^6` in the
//! unknowns `(alpha_N, beta_N, delta_N, rho_N, nu_+, nu_{N-1})`. A quantitative
//! inverse function theorem then needs a lower bound `r` on the smallest
//! singular value of the Jacobian, a bound `A` on all second partials over the
//! unit ball, and `|Gamma| <= D2 r^2` with `D2 = 1/(8 n^2 A)`.

use serde::Serialize;
use thiserror::Error;

use crate::exactnum::{Dual, Interval, NumError, Rational, Scalar};
use crate::fan_model::FanConfiguration;
use crate::system::{
    equality_residuals, has_plus_knot, inequality_margins_with, is_corrected_interface, EqLabel,
    EvalOptions, MarginLabel,
};

pub const DIM: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("run correction first: {0} is not exactly zero")]
    NotCorrected(String),
    #[error("certification needs at least two wave regions")]
    TooFewRegions,
    #[error("invalid constant: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Number(#[from] NumError),
}

/// The six perturbed unknowns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaPoint<S> {
    pub alpha: S,
    pub beta: S,
    pub delta: S,
    pub rho: S,
    pub nu: S,
    pub nu_tilde: S,
}

impl<S: Clone> GammaPoint<S> {
    pub fn to_array(&self) -> [S; DIM] {
        [
            self.alpha.clone(),
            self.beta.clone(),
            self.delta.clone(),
            self.rho.clone(),
            self.nu.clone(),
            self.nu_tilde.clone(),
        ]
    }

    pub fn from_array(x: [S; DIM]) -> Self {
        let [alpha, beta, delta, rho, nu, nu_tilde] = x;
        GammaPoint {
            alpha,
            beta,
            delta,
            rho,
            nu,
            nu_tilde,
        }
    }
}

/// Constants held fixed while the six unknowns move.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaParams<S> {
    pub rho_nm1: S,
    pub alpha_nm1: S,
    pub beta_nm1: S,
    pub gamma_nm1: S,
    pub delta_nm1: S,
    pub deps_nm1: S,
    pub c_nm1: S,
    pub gamma_n: S,
    pub deps_n: S,
    pub c_n: S,
    pub rho_plus: S,
    pub v_plus1: S,
    pub v_plus2: S,
    pub deps_plus: S,
}

impl<S: Clone> GammaParams<S> {
    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> GammaParams<T> {
        GammaParams {
            rho_nm1: f(&self.rho_nm1),
            alpha_nm1: f(&self.alpha_nm1),
            beta_nm1: f(&self.beta_nm1),
            gamma_nm1: f(&self.gamma_nm1),
            delta_nm1: f(&self.delta_nm1),
            deps_nm1: f(&self.deps_nm1),
            c_nm1: f(&self.c_nm1),
            gamma_n: f(&self.gamma_n),
            deps_n: f(&self.deps_n),
            c_n: f(&self.c_n),
            rho_plus: f(&self.rho_plus),
            v_plus1: f(&self.v_plus1),
            v_plus2: f(&self.v_plus2),
            deps_plus: f(&self.deps_plus),
        }
    }
}

/// Split a configuration into the perturbed point and the frozen constants.
pub fn split<S: Scalar>(
    cfg: &FanConfiguration<S>,
) -> Result<(GammaPoint<S>, GammaParams<S>), CertifyError> {
    let n = cfg.n_waves();
    if n < 2 {
        return Err(CertifyError::TooFewRegions);
    }
    let last = &cfg.states[n - 1];
    let prev = &cfg.states[n - 2];
    let x = GammaPoint {
        alpha: last.alpha.clone(),
        beta: last.beta.clone(),
        delta: last.delta.clone(),
        rho: last.rho.clone(),
        nu: cfg.speeds[n].clone(),
        nu_tilde: cfg.speeds[n - 1].clone(),
    };
    let p = GammaParams {
        rho_nm1: prev.rho.clone(),
        alpha_nm1: prev.alpha.clone(),
        beta_nm1: prev.beta.clone(),
        gamma_nm1: prev.gamma.clone(),
        delta_nm1: prev.delta.clone(),
        deps_nm1: cfg.thermo.deps[n - 2].clone(),
        c_nm1: prev.c.clone(),
        gamma_n: last.gamma.clone(),
        deps_n: cfg.thermo.deps[n - 1].clone(),
        c_n: last.c.clone(),
        rho_plus: cfg.datum.rho_plus.clone(),
        v_plus1: cfg.datum.v_plus[0].clone(),
        v_plus2: cfg.datum.v_plus[1].clone(),
        deps_plus: cfg.thermo.deps_plus.clone(),
    };
    Ok((x, p))
}

/// Write the six unknowns back into a configuration.
pub fn merge<S: Scalar>(cfg: &FanConfiguration<S>, x: &GammaPoint<S>) -> FanConfiguration<S> {
    let n = cfg.n_waves();
    let mut out = cfg.clone();
    let last = &mut out.states[n - 1];
    last.alpha = x.alpha.clone();
    last.beta = x.beta.clone();
    last.delta = x.delta.clone();
    last.rho = x.rho.clone();
    out.speeds[n] = x.nu.clone();
    out.speeds[n - 1] = x.nu_tilde.clone();
    out
}

/// Right-hand minus left-hand side of the six remaining jump relations.
pub fn gamma<S: Scalar>(x: &GammaPoint<S>, p: &GammaParams<S>) -> [S; DIM] {
    let c = |s: &S| s.clone();
    let (a, b, d, r, nu, nt) = (
        c(&x.alpha),
        c(&x.beta),
        c(&x.delta),
        c(&x.rho),
        c(&x.nu),
        c(&x.nu_tilde),
    );
    let pr = c(&p.rho_nm1);
    let rp = c(&p.rho_plus);
    [
        pr.clone() * c(&p.beta_nm1) - r.clone() * b.clone() - nt.clone() * (pr.clone() - r.clone()),
        pr.clone() * c(&p.delta_nm1)
            - r.clone() * d.clone()
            - nt.clone() * (pr.clone() * c(&p.alpha_nm1) - r.clone() * a.clone()),
        -(pr.clone() * c(&p.gamma_nm1)) + r.clone() * c(&p.gamma_n) + pr.square() * c(&p.deps_nm1)
            - r.square() * c(&p.deps_n)
            + (pr.clone() * c(&p.c_nm1)).half()
            - (r.clone() * c(&p.c_n)).half()
            - nt * (pr * c(&p.beta_nm1) - r.clone() * b.clone()),
        r.clone() * b.clone() - rp.clone() * c(&p.v_plus2) - nu.clone() * (r.clone() - rp.clone()),
        r.clone() * d
            - rp.clone() * c(&p.v_plus1) * c(&p.v_plus2)
            - nu.clone() * (r.clone() * a - rp.clone() * c(&p.v_plus1)),
        -(r.clone() * c(&p.gamma_n)) - rp.clone() * p.v_plus2.square() + r.square() * c(&p.deps_n)
            - rp.square() * c(&p.deps_plus)
            + (r.clone() * c(&p.c_n)).half()
            - nu * (r * b - rp * c(&p.v_plus2)),
    ]
}

/// Jacobian of [`gamma`], columns ordered as [`GammaPoint::to_array`].
pub fn gamma_jacobian<S: Scalar>(x: &GammaPoint<S>, p: &GammaParams<S>) -> [[S; DIM]; DIM] {
    let c = |s: &S| s.clone();
    let z = S::zero;
    let (a, b, d, r, nu, nt) = (
        c(&x.alpha),
        c(&x.beta),
        c(&x.delta),
        c(&x.rho),
        c(&x.nu),
        c(&x.nu_tilde),
    );
    let pr = c(&p.rho_nm1);
    let rp = c(&p.rho_plus);
    let two_r_deps = (r.clone() + r.clone()) * c(&p.deps_n);
    let half_c = p.c_n.half();
    [
        [
            z(),
            -r.clone(),
            z(),
            nt.clone() - b.clone(),
            z(),
            r.clone() - pr.clone(),
        ],
        [
            r.clone() * nt.clone(),
            z(),
            -r.clone(),
            a.clone() * nt.clone() - d.clone(),
            z(),
            r.clone() * a.clone() - pr.clone() * c(&p.alpha_nm1),
        ],
        [
            z(),
            nt.clone() * r.clone(),
            z(),
            c(&p.gamma_n) - two_r_deps.clone() - half_c.clone() + b.clone() * nt,
            z(),
            r.clone() * b.clone() - pr * c(&p.beta_nm1),
        ],
        [
            z(),
            r.clone(),
            z(),
            b.clone() - nu.clone(),
            rp.clone() - r.clone(),
            z(),
        ],
        [
            -(nu.clone() * r.clone()),
            z(),
            r.clone(),
            d - nu.clone() * a.clone(),
            rp.clone() * c(&p.v_plus1) - r.clone() * a,
            z(),
        ],
        [
            z(),
            -(nu.clone() * r.clone()),
            z(),
            two_r_deps + half_c - c(&p.gamma_n) - nu * b.clone(),
            rp * c(&p.v_plus2) - r * b,
            z(),
        ],
    ]
}

/// Exact check that `M^T M - c^2 I` is positive semidefinite, which implies
/// `sigma_min(M) >= c`. Works on any square matrix.
pub fn sigma_min_at_least(m: &[Vec<Rational>], c: &Rational) -> bool {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) || c.is_negative() {
        return false;
    }
    let c2 = c * c;
    let mut g: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut s = Rational::zero();
                    for row in m {
                        s += &(&row[i] * &row[j]);
                    }
                    if i == j {
                        s -= &c2;
                    }
                    s
                })
                .collect()
        })
        .collect();
    is_psd(&mut g)
}

/// Symmetric Gaussian elimination without pivoting. A zero pivot is allowed
/// only when its whole remaining row is zero.
fn is_psd(g: &mut [Vec<Rational>]) -> bool {
    let n = g.len();
    for k in 0..n {
        let d = g[k][k].clone();
        if d.is_negative() {
            return false;
        }
        if d.is_zero() {
            if g[k][k + 1..].iter().any(|v| !v.is_zero()) {
                return false;
            }
            continue;
        }
        for i in k + 1..n {
            if g[i][k].is_zero() {
                continue;
            }
            let f = &g[i][k] / &d;
            for j in k + 1..n {
                let t = &f * &g[k][j];
                g[i][j] -= &t;
            }
        }
    }
    true
}

pub fn jacobian_rows(j: &[[Rational; DIM]; DIM]) -> Vec<Vec<Rational>> {
    j.iter().map(|r| r.to_vec()).collect()
}

/// The nonzero second partials of `gamma` as `(component, i, j, value)` with `i <= j`.
pub fn second_partials<S: Scalar>(
    x: &GammaPoint<S>,
    p: &GammaParams<S>,
) -> Vec<(usize, usize, usize, S)> {
    const A: usize = 0;
    const B: usize = 1;
    const D: usize = 2;
    const R: usize = 3;
    const NU: usize = 4;
    const NT: usize = 5;
    let c = |s: &S| s.clone();
    let one = S::one;
    let two_deps = c(&p.deps_n) + c(&p.deps_n);
    vec![
        (0, B, R, -one()),
        (0, R, NT, one()),
        (1, D, R, -one()),
        (1, R, NT, c(&x.alpha)),
        (1, A, NT, c(&x.rho)),
        (1, A, R, c(&x.nu_tilde)),
        (2, R, R, -two_deps.clone()),
        (2, R, NT, c(&x.beta)),
        (2, B, NT, c(&x.rho)),
        (2, B, R, c(&x.nu_tilde)),
        (3, B, R, one()),
        (3, R, NU, -one()),
        (4, D, R, one()),
        (4, R, NU, -c(&x.alpha)),
        (4, A, NU, -c(&x.rho)),
        (4, A, R, -c(&x.nu)),
        (5, R, R, two_deps),
        (5, R, NU, -c(&x.beta)),
        (5, B, NU, -c(&x.rho)),
        (5, B, R, -c(&x.nu)),
    ]
}

/// Upper bound on every `|d^2 Gamma_k / dx_i dx_j|` over the box of half-width
/// `radius` around `center`, by interval evaluation of the second partials.
pub fn hessian_bound(
    p: &GammaParams<Rational>,
    center: &GammaPoint<Rational>,
    radius: &Rational,
) -> Result<Rational, CertifyError> {
    if radius.is_negative() {
        return Err(CertifyError::Invalid("negative radius"));
    }
    let boxed = GammaPoint::from_array(
        center
            .to_array()
            .map(|v| Interval::ball(&v, radius).expect("radius checked")),
    );
    let params = p.map(|v| Interval::point(v.clone()));
    Ok(second_partials(&boxed, &params)
        .into_iter()
        .map(|(_, _, _, v)| v.mag())
        .max()
        .unwrap_or_else(Rational::zero))
}

/// `(D1, D2) = (1/(4 n^2 A), 1/(8 n^2 A))`.
pub fn ift_constants(n: usize, a: &Rational) -> Result<(Rational, Rational), CertifyError> {
    if n == 0 {
        return Err(CertifyError::Invalid("dimension must be positive"));
    }
    if !a.is_positive() {
        return Err(CertifyError::Invalid(
            "second-derivative bound must be positive",
        ));
    }
    let n2 = Rational::from_integer((n * n) as i64);
    let d1 = (&(Rational::from_integer(4) * &n2) * a).recip()?;
    let d2 = (&(Rational::from_integer(8) * &n2) * a).recip()?;
    Ok((d1, d2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalEntry {
    pub label: MarginLabel,
    pub margin: Rational,
    /// Largest enclosed partial derivative over the box.
    pub lipschitz: Rational,
    pub pass: bool,
}

/// For each strict inequality that depends on the six perturbed unknowns,
/// bound its variation over the box of half-width `radius` and check that
/// the margin is larger: `margin > sqrt(6) L radius`, compared in squares.
pub fn margin_survival(
    cfg: &FanConfiguration<Rational>,
    radius: &Rational,
    opts: &EvalOptions,
) -> Result<Vec<SurvivalEntry>, CertifyError> {
    if radius.is_negative() {
        return Err(CertifyError::Invalid("negative radius"));
    }
    let (x, _) = split(cfg)?;
    let plus_knot = has_plus_knot(cfg, opts);
    let lift = |v: &Rational| Dual::constant(Interval::point(v.clone()));
    let mut lifted = cfg.map(lift);
    let vars = x.to_array();
    let mut dual_vars = Vec::with_capacity(DIM);
    for (k, v) in vars.iter().enumerate() {
        dual_vars.push(Dual::variable(Interval::ball(v, radius)?, k, DIM));
    }
    let dx = GammaPoint::from_array(dual_vars.try_into().expect("six coordinates"));
    lifted = merge(&lifted, &dx);
    let exact = inequality_margins_with(cfg, plus_knot);
    let boxed = inequality_margins_with(&lifted, plus_knot);
    let six = Rational::from_integer(DIM as i64);
    let r2 = radius * radius;
    let mut out = Vec::new();
    for (e, b) in exact.into_iter().zip(boxed) {
        debug_assert_eq!(e.label, b.label);
        let involved = b
            .value
            .grad
            .iter()
            .any(|g| !(g.lo().is_zero() && g.hi().is_zero()));
        if !involved {
            continue;
        }
        let lipschitz = b
            .value
            .grad
            .iter()
            .map(Interval::mag)
            .max()
            .unwrap_or_else(Rational::zero);
        let pass = e.value.is_positive()
            && &e.value * &e.value > &(&six * &(&lipschitz * &lipschitz)) * &r2;
        out.push(SurvivalEntry {
            label: e.label,
            margin: e.value,
            lipschitz,
            pass,
        });
    }
    Ok(out)
}

/// Singular-value levels tried in order.
pub fn sigma_grid() -> Vec<Rational> {
    (0..=7)
        .map(|k| Rational::new(2, 1i64 << k).expect("nonzero"))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IFTCertificate {
    pub n: usize,
    /// Certified lower bound on the smallest singular value; 0 when none was found.
    pub r: Rational,
    #[serde(rename = "A")]
    pub a: Rational,
    #[serde(rename = "D1")]
    pub d1: Rational,
    #[serde(rename = "D2")]
    pub d2: Rational,
    /// `D2 r^2`, the radius of the ball of reachable values.
    pub image_radius: Rational,
    pub residual_norm_squared: Rational,
    /// Rational upper bound on the Euclidean norm of `Gamma` at the point.
    pub residual_norm: Rational,
    /// Upper bound on the distance from the point to the exact root.
    pub root_distance: Rational,
    pub margin_survival: Vec<SurvivalEntry>,
    pub verdict: bool,
}

pub fn certify_existence(
    cfg: &FanConfiguration<Rational>,
    opts: &EvalOptions,
) -> Result<IFTCertificate, CertifyError> {
    let n_waves = cfg.n_waves();
    let (x, p) = split(cfg)?;
    for e in equality_residuals(cfg) {
        if let EqLabel::Jump(iface, _) = e.label {
            if is_corrected_interface(iface, n_waves) && !e.value.is_zero() {
                return Err(CertifyError::NotCorrected(e.label.to_string()));
            }
        }
    }
    let jac = jacobian_rows(&gamma_jacobian(&x, &p));
    let r = sigma_grid()
        .into_iter()
        .find(|c| sigma_min_at_least(&jac, c))
        .unwrap_or_else(Rational::zero);
    let a = hessian_bound(&p, &x, &Rational::one())?;
    let (d1, d2) = ift_constants(DIM, &a)?;
    let image_radius = &d2 * &(&r * &r);
    let residual_norm_squared = gamma(&x, &p)
        .iter()
        .fold(Rational::zero(), |s, g| s + g * g);
    let residual_norm = residual_norm_squared.sqrt_upper()?;
    let reachable = r.is_positive() && residual_norm_squared <= &image_radius * &image_radius;
    let (root_distance, margin_survival) = if r.is_positive() {
        let dist = &(Rational::from_integer(2) / &r) * &residual_norm;
        let surv = margin_survival(cfg, &dist, opts)?;
        (dist, surv)
    } else {
        (Rational::zero(), Vec::new())
    };
    let verdict = reachable && margin_survival.iter().all(|s| s.pass);
    Ok(IFTCertificate {
        n: DIM,
        r,
        a,
        d1,
        d2,
        image_radius,
        residual_norm_squared,
        residual_norm,
        root_distance,
        margin_survival,
        verdict,
    })
}
