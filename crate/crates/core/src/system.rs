//! The algebraic characterization of admissible fan subsolutions: jump
//! conditions across every interface, the subsolution and admissibility
//! inequalities, convexity of the energy table, positivity and ordering.
//!
//! The outer states enter as ghost states (`u = v (x) v - |v|^2/2 Id`,
//! `C = |v|^2`), so the left, inner and right interfaces share one formula.
//! Pressure is never a function here: `p_k = rho_k^2 eps'_k`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::exactnum::{Rational, Real, Scalar};
use crate::fan_model::{ghost_unchecked, FanConfiguration, WaveState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Interface {
    Left,
    /// Between regions `i` and `i + 1`.
    Inner(usize),
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Mass,
    Momentum1,
    Momentum2,
}

/// A point of the energy table: an outer state or a wave region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Knot {
    Minus,
    Wave(usize),
    Plus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContactField {
    Density,
    Energy,
    EnergyDerivative,
    NormalVelocity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EqLabel {
    Jump(Interface, Component),
    Contact(ContactField),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MarginLabel {
    /// `C - |v|^2` in a region.
    Trace(usize),
    /// Determinant of the Reynolds stress in a region.
    Determinant(usize),
    Entropy(Interface),
    /// `nu_k - nu_{k-1}`.
    Ordering(usize),
    /// Tangent line at the first knot lies strictly below the second knot.
    Convexity(Knot, Knot),
    Density(Knot),
    EnergyDerivative(Knot),
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interface::Left => write!(f, "left"),
            Interface::Inner(i) => write!(f, "{i}|{}", i + 1),
            Interface::Right => write!(f, "right"),
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Component::Mass => "mass",
            Component::Momentum1 => "momentum1",
            Component::Momentum2 => "momentum2",
        })
    }
}

impl fmt::Display for Knot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Knot::Minus => write!(f, "-"),
            Knot::Wave(i) => write!(f, "{i}"),
            Knot::Plus => write!(f, "+"),
        }
    }
}

impl fmt::Display for EqLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqLabel::Jump(i, c) => write!(f, "{c}[{i}]"),
            EqLabel::Contact(c) => write!(
                f,
                "contact[{}]",
                match c {
                    ContactField::Density => "rho",
                    ContactField::Energy => "eps",
                    ContactField::EnergyDerivative => "deps",
                    ContactField::NormalVelocity => "v2",
                }
            ),
        }
    }
}

impl fmt::Display for MarginLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginLabel::Trace(i) => write!(f, "trace[{i}]"),
            MarginLabel::Determinant(i) => write!(f, "determinant[{i}]"),
            MarginLabel::Entropy(i) => write!(f, "entropy[{i}]"),
            MarginLabel::Ordering(k) => write!(f, "ordering[{}<{k}]", k - 1),
            MarginLabel::Convexity(i, j) => write!(f, "convexity[{i},{j}]"),
            MarginLabel::Density(k) => write!(f, "density[{k}]"),
            MarginLabel::EnergyDerivative(k) => write!(f, "deps[{k}]"),
        }
    }
}

macro_rules! serialize_as_display {
    ($($t:ty),*) => {$(
        impl Serialize for $t {
            fn serialize<Z: Serializer>(&self, s: Z) -> Result<Z::Ok, Z::Error> {
                s.collect_str(self)
            }
        }
    )*};
}
serialize_as_display!(Interface, Knot, EqLabel, MarginLabel);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Entry<L, S> {
    pub label: L,
    pub value: S,
}

/// Optional parts of the system: the contact identities and the right convexity knot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    /// Append the contact-discontinuity identities `rho+ = rho-`, `eps+ = eps-`,
    /// `eps'+ = eps'-`, `v+2 = v-2` as equality residuals.
    pub contact: bool,
    /// Include the right outer state as its own convexity knot when `rho+ != rho-`.
    /// With equal densities it is always merged into the left one.
    pub include_right_knot: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            contact: false,
            include_right_knot: false,
        }
    }
}

/// A region or outer state together with its energy table entries.
#[derive(Clone, Debug)]
pub struct Side<S> {
    pub state: WaveState<S>,
    pub eps: S,
    pub deps: S,
}

impl<S: Scalar> Side<S> {
    fn pressure(&self) -> S {
        self.state.rho.square() * self.deps.clone()
    }
}

/// `[ghost(-), region 1, ..., region N, ghost(+)]`.
pub fn sides<S: Scalar>(cfg: &FanConfiguration<S>) -> Vec<Side<S>> {
    let d = &cfg.datum;
    let t = &cfg.thermo;
    let mut out = Vec::with_capacity(cfg.states.len() + 2);
    out.push(Side {
        state: ghost_unchecked(&d.v_minus, &d.rho_minus),
        eps: t.eps_minus.clone(),
        deps: t.deps_minus.clone(),
    });
    for (i, s) in cfg.states.iter().enumerate() {
        out.push(Side {
            state: s.clone(),
            eps: t.eps[i].clone(),
            deps: t.deps[i].clone(),
        });
    }
    out.push(Side {
        state: ghost_unchecked(&d.v_plus, &d.rho_plus),
        eps: t.eps_plus.clone(),
        deps: t.deps_plus.clone(),
    });
    out
}

/// Label of interface `k` (between sides `k` and `k+1`) in a fan with `n` regions.
pub fn interface_label(k: usize, n: usize) -> Interface {
    if k == 0 {
        Interface::Left
    } else if k == n {
        Interface::Right
    } else {
        Interface::Inner(k)
    }
}

/// Mass and momentum jump residuals (left side minus right side of each
/// Rankine-Hugoniot relation) across an interface moving with speed `nu`.
pub fn jump_residuals<S: Scalar>(l: &Side<S>, r: &Side<S>, nu: &S) -> [S; 3] {
    let (a, b) = (&l.state, &r.state);
    let mass = nu.clone() * (a.rho.clone() - b.rho.clone())
        - (a.rho.clone() * a.beta.clone() - b.rho.clone() * b.beta.clone());
    let mom1 = nu.clone() * (a.rho.clone() * a.alpha.clone() - b.rho.clone() * b.alpha.clone())
        - (a.rho.clone() * a.delta.clone() - b.rho.clone() * b.delta.clone());
    let mom2 = nu.clone() * (a.rho.clone() * a.beta.clone() - b.rho.clone() * b.beta.clone())
        - (-(a.rho.clone() * a.gamma.clone()) + b.rho.clone() * b.gamma.clone() + l.pressure()
            - r.pressure()
            + (a.rho.clone() * a.c.clone()).half()
            - (b.rho.clone() * b.c.clone()).half());
    [mass, mom1, mom2]
}

/// Energy flux minus energy transport across an interface; positive means the
/// admissibility inequality holds strictly.
pub fn entropy_margin<S: Scalar>(l: &Side<S>, r: &Side<S>, nu: &S) -> S {
    let (a, b) = (&l.state, &r.state);
    let lhs = nu.clone() * (a.rho.clone() * l.eps.clone() - b.rho.clone() * r.eps.clone())
        + nu.clone() * (a.rho.clone() * a.c.clone() - b.rho.clone() * b.c.clone()).half();
    let rhs = (a.rho.clone() * l.eps.clone() + l.pressure()) * a.beta.clone()
        - (b.rho.clone() * r.eps.clone() + r.pressure()) * b.beta.clone()
        + (a.rho.clone() * a.beta.clone() * a.c.clone()).half()
        - (b.rho.clone() * b.beta.clone() * b.c.clone()).half();
    rhs - lhs
}

/// `C - alpha^2 - beta^2`.
pub fn trace_margin<S: Scalar>(s: &WaveState<S>) -> S {
    s.c.clone() - s.alpha.square() - s.beta.square()
}

/// `(C/2 - alpha^2 + gamma)(C/2 - beta^2 - gamma) - (delta - alpha beta)^2`.
pub fn determinant_margin<S: Scalar>(s: &WaveState<S>) -> S {
    let h = s.c.half();
    (h.clone() - s.alpha.square() + s.gamma.clone()) * (h - s.beta.square() - s.gamma.clone())
        - (s.delta.clone() - s.alpha.clone() * s.beta.clone()).square()
}

/// The `3(N+1)` jump residuals, interface by interface from left to right.
pub fn equality_residuals<S: Scalar>(cfg: &FanConfiguration<S>) -> Vec<Entry<EqLabel, S>> {
    let n = cfg.n_waves();
    let sd = sides(cfg);
    let mut out = Vec::with_capacity(3 * (n + 1));
    for k in 0..=n {
        let iface = interface_label(k, n);
        let [m, p, q] = jump_residuals(&sd[k], &sd[k + 1], &cfg.speeds[k]);
        for (c, v) in [
            (Component::Mass, m),
            (Component::Momentum1, p),
            (Component::Momentum2, q),
        ] {
            out.push(Entry {
                label: EqLabel::Jump(iface, c),
                value: v,
            });
        }
    }
    out
}

/// `rho+ - rho-`, `eps+ - eps-`, `eps'+ - eps'-`, `v+2 - v-2`.
pub fn contact_residuals<S: Scalar>(cfg: &FanConfiguration<S>) -> Vec<Entry<EqLabel, S>> {
    let d = &cfg.datum;
    let t = &cfg.thermo;
    vec![
        Entry {
            label: EqLabel::Contact(ContactField::Density),
            value: d.rho_plus.clone() - d.rho_minus.clone(),
        },
        Entry {
            label: EqLabel::Contact(ContactField::Energy),
            value: t.eps_plus.clone() - t.eps_minus.clone(),
        },
        Entry {
            label: EqLabel::Contact(ContactField::EnergyDerivative),
            value: t.deps_plus.clone() - t.deps_minus.clone(),
        },
        Entry {
            label: EqLabel::Contact(ContactField::NormalVelocity),
            value: d.v_plus[1].clone() - d.v_minus[1].clone(),
        },
    ]
}

/// Knots of the energy table as `(knot, rho, eps, eps')`.
pub fn thermo_knots<S: Scalar>(cfg: &FanConfiguration<S>, plus_knot: bool) -> Vec<(Knot, S, S, S)> {
    let t = &cfg.thermo;
    let mut out = vec![(
        Knot::Minus,
        cfg.datum.rho_minus.clone(),
        t.eps_minus.clone(),
        t.deps_minus.clone(),
    )];
    for (i, s) in cfg.states.iter().enumerate() {
        out.push((
            Knot::Wave(i + 1),
            s.rho.clone(),
            t.eps[i].clone(),
            t.deps[i].clone(),
        ));
    }
    if plus_knot {
        out.push((
            Knot::Plus,
            cfg.datum.rho_plus.clone(),
            t.eps_plus.clone(),
            t.deps_plus.clone(),
        ));
    }
    out
}

/// Whether the right outer state is a separate convexity knot under `opts`.
pub fn has_plus_knot<S: Real>(cfg: &FanConfiguration<S>, opts: &EvalOptions) -> bool {
    opts.include_right_knot && cfg.datum.rho_plus != cfg.datum.rho_minus
}

/// `eps_j - eps_i - eps'_i (rho_j - rho_i)` for all ordered pairs `i != j`.
pub fn convexity_margins<S: Scalar>(knots: &[(Knot, S, S, S)]) -> Vec<Entry<MarginLabel, S>> {
    let mut out = Vec::with_capacity(knots.len() * knots.len().saturating_sub(1));
    for (ki, ri, ei, di) in knots {
        for (kj, rj, ej, _) in knots {
            if ki == kj {
                continue;
            }
            out.push(Entry {
                label: MarginLabel::Convexity(*ki, *kj),
                value: ej.clone() - ei.clone() - di.clone() * (rj.clone() - ri.clone()),
            });
        }
    }
    out
}

/// All strict-inequality margins with an explicit convexity knot layout.
pub fn inequality_margins_with<S: Scalar>(
    cfg: &FanConfiguration<S>,
    plus_knot: bool,
) -> Vec<Entry<MarginLabel, S>> {
    let n = cfg.n_waves();
    let sd = sides(cfg);
    let mut out = Vec::new();
    for (i, s) in cfg.states.iter().enumerate() {
        out.push(Entry {
            label: MarginLabel::Trace(i + 1),
            value: trace_margin(s),
        });
        out.push(Entry {
            label: MarginLabel::Determinant(i + 1),
            value: determinant_margin(s),
        });
    }
    for k in 0..=n {
        out.push(Entry {
            label: MarginLabel::Entropy(interface_label(k, n)),
            value: entropy_margin(&sd[k], &sd[k + 1], &cfg.speeds[k]),
        });
    }
    for k in 1..=n {
        out.push(Entry {
            label: MarginLabel::Ordering(k),
            value: cfg.speeds[k].clone() - cfg.speeds[k - 1].clone(),
        });
    }
    out.extend(convexity_margins(&thermo_knots(cfg, plus_knot)));
    for (knot, rho, deps) in positivity_terms(cfg) {
        out.push(Entry {
            label: MarginLabel::Density(knot),
            value: rho,
        });
        out.push(Entry {
            label: MarginLabel::EnergyDerivative(knot),
            value: deps,
        });
    }
    out
}

fn positivity_terms<S: Scalar>(cfg: &FanConfiguration<S>) -> Vec<(Knot, S, S)> {
    let t = &cfg.thermo;
    let mut out = vec![(
        Knot::Minus,
        cfg.datum.rho_minus.clone(),
        t.deps_minus.clone(),
    )];
    for (i, s) in cfg.states.iter().enumerate() {
        out.push((Knot::Wave(i + 1), s.rho.clone(), t.deps[i].clone()));
    }
    out.push((Knot::Plus, cfg.datum.rho_plus.clone(), t.deps_plus.clone()));
    out
}

pub fn inequality_margins<S: Real>(
    cfg: &FanConfiguration<S>,
    opts: &EvalOptions,
) -> Vec<Entry<MarginLabel, S>> {
    inequality_margins_with(cfg, has_plus_knot(cfg, opts))
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport<S> {
    pub equalities: Vec<Entry<EqLabel, S>>,
    pub margins: Vec<Entry<MarginLabel, S>>,
    pub max_abs_residual: S,
    pub min_margin: S,
    /// Every residual exactly zero and every margin above the floor.
    pub exact_feasible: bool,
}

pub fn evaluate<S: Real>(
    cfg: &FanConfiguration<S>,
    margin_floor: &S,
    opts: &EvalOptions,
) -> ResidualReport<S> {
    let mut equalities = equality_residuals(cfg);
    if opts.contact {
        equalities.extend(contact_residuals(cfg));
    }
    let margins = inequality_margins(cfg, opts);
    let max_abs_residual = equalities
        .iter()
        .map(|e| e.value.abs())
        .fold(S::zero(), S::max_of);
    let min_margin = margins
        .iter()
        .map(|e| e.value.clone())
        .reduce(S::min_of)
        .unwrap_or_else(S::zero);
    let exact_feasible = equalities.iter().all(|e| e.value == S::zero())
        && margins.iter().all(|e| e.value > *margin_floor);
    ResidualReport {
        equalities,
        margins,
        max_abs_residual,
        min_margin,
        exact_feasible,
    }
}

/// Magnitude limits of the bounds table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundsTable {
    pub velocity: i64,
    pub alpha: i64,
    pub beta: i64,
    pub gamma: i64,
    pub delta: i64,
    pub speed: i64,
    pub c: i64,
    pub rho: i64,
    pub eps: i64,
    pub deps: i64,
}

impl Default for BoundsTable {
    fn default() -> Self {
        BoundsTable {
            velocity: 59,
            alpha: 59,
            beta: 19,
            gamma: 1531,
            delta: 1046,
            speed: 34,
            c: 3714,
            rho: 13,
            eps: 2308,
            deps: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck<S> {
    pub name: &'static str,
    pub limit: i64,
    pub observed: S,
    pub pass: bool,
}

/// Largest magnitude in each family against its limit.
pub fn bounds_check<S: Real>(cfg: &FanConfiguration<S>, table: &BoundsTable) -> Vec<BoundCheck<S>> {
    let d = &cfg.datum;
    let t = &cfg.thermo;
    let st = &cfg.states;
    let max_abs = |xs: Vec<&S>| xs.into_iter().map(|x| x.abs()).fold(S::zero(), S::max_of);
    let rows: Vec<(&'static str, i64, S)> = vec![
        (
            "velocity",
            table.velocity,
            max_abs(vec![
                &d.v_minus[0],
                &d.v_minus[1],
                &d.v_plus[0],
                &d.v_plus[1],
            ]),
        ),
        (
            "alpha",
            table.alpha,
            max_abs(st.iter().map(|s| &s.alpha).collect()),
        ),
        (
            "beta",
            table.beta,
            max_abs(st.iter().map(|s| &s.beta).collect()),
        ),
        (
            "gamma",
            table.gamma,
            max_abs(st.iter().map(|s| &s.gamma).collect()),
        ),
        (
            "delta",
            table.delta,
            max_abs(st.iter().map(|s| &s.delta).collect()),
        ),
        ("speed", table.speed, max_abs(cfg.speeds.iter().collect())),
        ("C", table.c, max_abs(st.iter().map(|s| &s.c).collect())),
        (
            "rho",
            table.rho,
            max_abs(
                [&d.rho_minus, &d.rho_plus]
                    .into_iter()
                    .chain(st.iter().map(|s| &s.rho))
                    .collect(),
            ),
        ),
        (
            "eps",
            table.eps,
            max_abs(
                [&t.eps_minus, &t.eps_plus]
                    .into_iter()
                    .chain(t.eps.iter())
                    .collect(),
            ),
        ),
        (
            "deps",
            table.deps,
            max_abs(
                [&t.deps_minus, &t.deps_plus]
                    .into_iter()
                    .chain(t.deps.iter())
                    .collect(),
            ),
        ),
    ];
    rows.into_iter()
        .map(|(name, limit, observed)| BoundCheck {
            name,
            limit,
            pass: observed <= S::from_i64(limit),
            observed,
        })
        .collect()
}

/// Which jump relations the correction step makes exact: the left interface and
/// the inner interfaces `1..=N-2`.
pub fn is_corrected_interface(iface: Interface, n: usize) -> bool {
    match iface {
        Interface::Left => true,
        Interface::Inner(i) => i + 2 <= n,
        Interface::Right => false,
    }
}

/// Exact check of the witness conclusions: corrected jump relations vanish,
/// the remaining ones are below `tolerance`, every margin is at least
/// `margin_floor`, and every bound of `table` holds.
#[derive(Clone, Debug, Serialize)]
pub struct ConclusionReport {
    pub report: ResidualReport<Rational>,
    pub corrected_exact: bool,
    pub approximate_max: Rational,
    pub approximate_ok: bool,
    pub margins_ok: bool,
    pub bounds: Vec<BoundCheck<Rational>>,
    pub bounds_ok: bool,
    pub pass: bool,
}

pub fn check_conclusions(
    cfg: &FanConfiguration<Rational>,
    margin_floor: &Rational,
    tolerance: &Rational,
    opts: &EvalOptions,
    table: &BoundsTable,
) -> ConclusionReport {
    let n = cfg.n_waves();
    let report = evaluate(cfg, margin_floor, opts);
    let mut corrected_exact = true;
    let mut approximate_max = Rational::zero();
    for e in &report.equalities {
        match e.label {
            EqLabel::Jump(iface, _) if !is_corrected_interface(iface, n) => {
                approximate_max = approximate_max.max(e.value.abs());
            }
            _ => corrected_exact &= e.value.is_zero(),
        }
    }
    let approximate_ok = approximate_max < *tolerance;
    let margins_ok = report.margins.iter().all(|m| m.value >= *margin_floor);
    let bounds = bounds_check(cfg, table);
    let bounds_ok = bounds.iter().all(|b| b.pass);
    ConclusionReport {
        pass: corrected_exact && approximate_ok && margins_ok && bounds_ok,
        report,
        corrected_exact,
        approximate_max,
        approximate_ok,
        margins_ok,
        bounds,
        bounds_ok,
    }
}
