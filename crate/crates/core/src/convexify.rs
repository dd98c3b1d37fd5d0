//! A strictly convex internal energy through prescribed values and derivatives.
//!
//! The derivative `eps'` is first built exactly, as a continuous piecewise
//! linear function with positive slopes. Every gap between two knots carries
//! three breakpoints and `eps'` is affine near each knot, so no corner sits on
//! a knot. The corners are then rounded by convolution with a compactly
//! supported smooth bump, and the middle level of each gap is shifted so the
//! integral of `eps'` across the gap is unchanged. The resulting energy is
//! smooth, matches every knot, and has `eps'' >= ` the smallest slope.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exactnum::Rational;
use crate::fan_model::FanConfiguration;
use crate::system::thermo_knots;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermiteKnot {
    pub rho: Rational,
    pub eps: Rational,
    pub deps: Rational,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvexError {
    #[error("no interpolation data")]
    Empty,
    #[error("non-positive density {0}")]
    NonPositiveDensity(Rational),
    #[error("inconsistent values for the repeated density {0}")]
    Inconsistent(Rational),
    #[error("tangent inequality at density {from} fails toward {to} (margin {margin})")]
    Inadmissible {
        from: Rational,
        to: Rational,
        margin: Rational,
    },
    #[error("derivative {deps} at density {rho} is not positive")]
    NonPositiveDerivative { rho: Rational, deps: Rational },
    #[error("domain [{lo}, {hi}] must be positive and contain every knot")]
    BadDomain { lo: Rational, hi: Rational },
    #[error("density {rho} outside the domain [{lo}, {hi}]")]
    OutOfDomain { rho: f64, lo: f64, hi: f64 },
    #[error("malformed interpolant: {0}")]
    Malformed(&'static str),
}

/// Sort by density and merge repeated densities carrying identical data.
pub fn merge_knots(knots: &[HermiteKnot]) -> Result<Vec<HermiteKnot>, ConvexError> {
    if knots.is_empty() {
        return Err(ConvexError::Empty);
    }
    let mut sorted = knots.to_vec();
    if let Some(k) = sorted.iter().find(|k| !k.rho.is_positive()) {
        return Err(ConvexError::NonPositiveDensity(k.rho.clone()));
    }
    sorted.sort_by(|a, b| a.rho.cmp(&b.rho));
    let mut out: Vec<HermiteKnot> = Vec::with_capacity(sorted.len());
    for k in sorted {
        match out.last() {
            Some(prev) if prev.rho == k.rho => {
                if prev != &k {
                    return Err(ConvexError::Inconsistent(k.rho));
                }
            }
            _ => out.push(k),
        }
    }
    Ok(out)
}

fn tangent_margin(i: &HermiteKnot, j: &HermiteKnot) -> Rational {
    &j.eps - &i.eps - &i.deps * (&j.rho - &i.rho)
}

fn worst_pair(knots: &[HermiteKnot]) -> Option<(usize, usize, Rational)> {
    let mut worst: Option<(usize, usize, Rational)> = None;
    for (a, i) in knots.iter().enumerate() {
        for (b, j) in knots.iter().enumerate() {
            if a == b {
                continue;
            }
            let m = tangent_margin(i, j);
            if worst.as_ref().map_or(true, |w| m < w.2) {
                worst = Some((a, b, m));
            }
        }
    }
    worst
}

/// Smallest `eps_j - eps_i - eps'_i (rho_j - rho_i)` over ordered pairs of
/// distinct densities; `None` with fewer than two. Positive means admissible.
pub fn check_interpolation_data(knots: &[HermiteKnot]) -> Result<Option<Rational>, ConvexError> {
    let merged = merge_knots(knots)?;
    Ok(worst_pair(&merged).map(|w| w.2))
}

/// Knots (`-`, `1..N`, `+`) carried by a configuration's thermodynamic table.
pub fn knots_from_config(cfg: &FanConfiguration<Rational>) -> Vec<HermiteKnot> {
    thermo_knots(cfg, true)
        .into_iter()
        .map(|(_, rho, eps, deps)| HermiteKnot { rho, eps, deps })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    /// Defaults to `[max(min rho - 1, min rho / 2), max rho + 1]`.
    pub domain: Option<(Rational, Rational)>,
}

pub fn default_domain(knots: &[HermiteKnot]) -> Result<(Rational, Rational), ConvexError> {
    let merged = merge_knots(knots)?;
    let first = &merged[0].rho;
    let last = &merged[merged.len() - 1].rho;
    let one = Rational::one();
    let lo = std::cmp::max(first - &one, first * &Rational::new(1, 2).expect("nonzero"));
    Ok((lo, last + &one))
}

/// Standard bump `exp(-1/(1-y^2))` on `(-1, 1)`, normalized to unit mass, and
/// the integrals needed to round a corner with it.
struct Bump {
    rule: GaussLegendre,
    norm: f64,
    kappa: f64,
}

const NODES: usize = 128;

fn raw_bump(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - y * y)).exp()
    }
}

fn bump() -> &'static Bump {
    static B: OnceLock<Bump> = OnceLock::new();
    B.get_or_init(|| {
        let rule = GaussLegendre::new(NonZeroUsize::new(NODES).expect("nonzero"));
        let norm = rule.integrate(-1.0, 1.0, raw_bump);
        let m2 = rule.integrate(-1.0, 1.0, |y| y * y * raw_bump(y)) / norm;
        Bump {
            rule,
            norm,
            kappa: m2 / 2.0,
        }
    })
}

impl Bump {
    fn phi(&self, y: f64) -> f64 {
        raw_bump(y) / self.norm
    }

    /// Cumulative mass on `[-1, t]`.
    fn cdf(&self, t: f64) -> f64 {
        if t <= -1.0 {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            self.rule.integrate(-1.0, t, |y| self.phi(y))
        }
    }

    /// Convolution of `t_+` with the bump, minus `t_+`.
    fn ramp_defect(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            0.0
        } else {
            self.rule.integrate(-1.0, t, |y| (t - y) * self.phi(y)) - t.max(0.0)
        }
    }

    /// Antiderivative of `ramp_defect` from `-1`; equals `kappa` beyond 1.
    fn ramp_defect_integral(&self, t: f64) -> f64 {
        if t <= -1.0 {
            0.0
        } else if t >= 1.0 {
            self.kappa
        } else {
            let tp = t.max(0.0);
            self.rule
                .integrate(-1.0, t, |y| 0.5 * (t - y) * (t - y) * self.phi(y))
                - 0.5 * tp * tp
        }
    }
}

/// `(1/2) * integral of y^2` against the normalized bump.
pub fn bump_second_moment_half() -> f64 {
    bump().kappa
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub rho: Rational,
    pub deps: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct InterpolantRecord {
    knots: Vec<HermiteKnot>,
    domain: [Rational; 2],
    vertices: Vec<Vertex>,
    breakpoints: Vec<Rational>,
    slopes: Vec<Rational>,
    smoothing_radius: Rational,
    smoothed_levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
struct FloatView {
    lo: f64,
    hi: f64,
    h: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    eps: Vec<f64>,
}

/// Exact skeleton plus its smoothed float realization.
///
/// `vertices` run from the first to the last knot; knot `i` is vertex `4 i`
/// and the three vertices between consecutive knots are the breakpoints.
/// `slopes[j]` is the slope of `eps'` left of vertex `j`; the first and last
/// entries continue beyond the knot range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InterpolantRecord", into = "InterpolantRecord")]
pub struct ConvexInterpolant {
    pub knots: Vec<HermiteKnot>,
    pub domain: (Rational, Rational),
    pub vertices: Vec<Vertex>,
    pub breakpoints: Vec<Rational>,
    pub slopes: Vec<Rational>,
    pub smoothing_radius: Rational,
    /// Middle level of each gap after compensating for corner rounding.
    pub smoothed_levels: Vec<f64>,
    float: FloatView,
}

impl From<ConvexInterpolant> for InterpolantRecord {
    fn from(c: ConvexInterpolant) -> Self {
        InterpolantRecord {
            knots: c.knots,
            domain: [c.domain.0, c.domain.1],
            vertices: c.vertices,
            breakpoints: c.breakpoints,
            slopes: c.slopes,
            smoothing_radius: c.smoothing_radius,
            smoothed_levels: c.smoothed_levels,
        }
    }
}

impl TryFrom<InterpolantRecord> for ConvexInterpolant {
    type Error = ConvexError;

    fn try_from(r: InterpolantRecord) -> Result<Self, ConvexError> {
        let n = r.knots.len();
        if n == 0 {
            return Err(ConvexError::Empty);
        }
        if r.vertices.len() != 4 * (n - 1) + 1 {
            return Err(ConvexError::Malformed("vertex count"));
        }
        if r.slopes.len() != r.vertices.len() + 1 {
            return Err(ConvexError::Malformed("slope count"));
        }
        if r.smoothed_levels.len() != n - 1 || r.breakpoints.len() != 3 * (n - 1) {
            return Err(ConvexError::Malformed("gap count"));
        }
        let [lo, hi] = r.domain;
        let mut c = ConvexInterpolant {
            knots: r.knots,
            domain: (lo, hi),
            vertices: r.vertices,
            breakpoints: r.breakpoints,
            slopes: r.slopes,
            smoothing_radius: r.smoothing_radius,
            smoothed_levels: r.smoothed_levels,
            float: FloatView::default(),
        };
        c.float = c.float_view();
        Ok(c)
    }
}

struct Gap {
    a: Rational,
    u: Rational,
    b: Rational,
    level: Rational,
}

/// Build the interpolant. Requires positive derivatives and strictly
/// positive tangent margins.
pub fn build(knots: &[HermiteKnot], opts: &BuildOptions) -> Result<ConvexInterpolant, ConvexError> {
    let k = merge_knots(knots)?;
    let (lo, hi) = match &opts.domain {
        Some(d) => d.clone(),
        None => default_domain(&k)?,
    };
    if !lo.is_positive() || lo > k[0].rho || hi < k[k.len() - 1].rho || lo >= hi {
        return Err(ConvexError::BadDomain { lo, hi });
    }
    if let Some(bad) = k.iter().find(|x| !x.deps.is_positive()) {
        return Err(ConvexError::NonPositiveDerivative {
            rho: bad.rho.clone(),
            deps: bad.deps.clone(),
        });
    }
    if let Some((i, j, margin)) = worst_pair(&k) {
        if !margin.is_positive() {
            return Err(ConvexError::Inadmissible {
                from: k[i].rho.clone(),
                to: k[j].rho.clone(),
                margin,
            });
        }
    }
    let half = Rational::new(1, 2).expect("nonzero");
    let quarter = Rational::new(1, 4).expect("nonzero");
    let n = k.len();

    // One-corner profile per gap: the secant level is reached where the
    // integral matches, giving slopes (left, right).
    let mut base = Vec::with_capacity(n - 1);
    for w in k.windows(2) {
        let (l, r) = (&w[0], &w[1]);
        let dx = &r.rho - &l.rho;
        let s = (&r.eps - &l.eps) / &dx;
        let u = &dx * (&r.deps - &s) / (&r.deps - &l.deps);
        let left = (&s - &l.deps) / &u;
        let right = (&r.deps - &s) / (&dx - &u);
        base.push((dx, s, u, left, right));
    }
    let mut knot_slope: Vec<Rational> = (0..n)
        .map(|i| {
            let left = (i > 0).then(|| base[i - 1].4.clone());
            let right = (i + 1 < n).then(|| base[i].3.clone());
            match (left, right) {
                (Some(a), Some(b)) => std::cmp::min(a, b) * &half,
                (Some(a), None) | (None, Some(a)) => a * &half,
                (None, None) => Rational::from_integer(2),
            }
        })
        .collect();
    // Keep eps' above a quarter of its first knot value on the left extension.
    if lo < k[0].rho {
        let cap = Rational::new(3, 4).expect("nonzero") * &k[0].deps / (&k[0].rho - &lo);
        if knot_slope[0] > cap {
            knot_slope[0] = cap;
        }
    }

    let mut gaps = Vec::with_capacity(n - 1);
    for (g, (dx, s, u, _, _)) in base.iter().enumerate() {
        let (d0, d1) = (&k[g].deps, &k[g + 1].deps);
        let (k0, k1) = (&knot_slope[g], &knot_slope[g + 1]);
        let mut a = u * &quarter;
        let mut b = (dx - u) * &quarter;
        let mut found = None;
        for _ in 0..200 {
            let ya = d0 + k0 * &a;
            let yb = d1 - k1 * &b;
            let two = Rational::from_integer(2);
            let rest = &a * (d0 + &ya) + (u - &a) * &ya + (dx - u - &b) * &yb + &b * (&yb + d1);
            let m = (&two * dx * s - rest) / (dx - &a - &b);
            if ya < m && m < yb {
                found = Some(m);
                break;
            }
            a = a * &half;
            b = b * &half;
        }
        let level = found.ok_or(ConvexError::Malformed("no admissible breakpoint placement"))?;
        gaps.push(Gap {
            a,
            u: u.clone(),
            b,
            level,
        });
    }

    let mut vertices = vec![Vertex {
        rho: k[0].rho.clone(),
        deps: k[0].deps.clone(),
    }];
    let mut breakpoints = Vec::with_capacity(3 * (n - 1));
    for (g, gap) in gaps.iter().enumerate() {
        let (l, r) = (&k[g], &k[g + 1]);
        let pts = [
            (&l.rho + &gap.a, &l.deps + &knot_slope[g] * &gap.a),
            (&l.rho + &gap.u, gap.level.clone()),
            (&r.rho - &gap.b, &r.deps - &knot_slope[g + 1] * &gap.b),
        ];
        for (x, y) in pts {
            breakpoints.push(x.clone());
            vertices.push(Vertex { rho: x, deps: y });
        }
        vertices.push(Vertex {
            rho: r.rho.clone(),
            deps: r.deps.clone(),
        });
    }
    let mut slopes = vec![knot_slope[0].clone()];
    for w in vertices.windows(2) {
        slopes.push((&w[1].deps - &w[0].deps) / (&w[1].rho - &w[0].rho));
    }
    slopes.push(knot_slope[n - 1].clone());

    // Corner rounding radius: a quarter of the closest vertex spacing, halved
    // until every compensated middle level stays strictly between its
    // neighbours.
    let mut h = vertices
        .windows(2)
        .map(|w| &w[1].rho - &w[0].rho)
        .min()
        .map(|d| d * &quarter)
        .unwrap_or_else(Rational::one);
    let kappa = bump().kappa;
    let mut levels;
    let mut tries = 0;
    loop {
        let hf = h.to_f64();
        levels = Vec::with_capacity(n - 1);
        let mut ok = true;
        for (g, gap) in gaps.iter().enumerate() {
            let dx = &k[g + 1].rho - &k[g].rho;
            let span = (&dx - &gap.a - &gap.b).to_f64();
            let jump = (&knot_slope[g + 1] - &knot_slope[g]).to_f64();
            let m = gap.level.to_f64() - 2.0 * hf * hf * kappa * jump / span;
            let below = vertices[4 * g + 1].deps.to_f64();
            let above = vertices[4 * g + 3].deps.to_f64();
            ok &= below < m && m < above;
            levels.push(m);
        }
        if ok {
            break;
        }
        tries += 1;
        if tries > 200 {
            return Err(ConvexError::Malformed("no admissible smoothing radius"));
        }
        h = h * &half;
    }

    let mut c = ConvexInterpolant {
        knots: k,
        domain: (lo, hi),
        vertices,
        breakpoints,
        slopes,
        smoothing_radius: h,
        smoothed_levels: levels,
        float: FloatView::default(),
    };
    c.float = c.float_view();
    Ok(c)
}

/// Pointwise values of the smoothed energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyPoint {
    pub eps: f64,
    pub deps: f64,
    pub d2eps: f64,
    /// Smallest slope of `eps'` among the pieces meeting near `rho`.
    pub d2eps_lower: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PressureRow {
    pub rho: f64,
    pub eps: f64,
    pub deps: f64,
    pub p: f64,
    pub dp: f64,
}

/// `p = rho^2 eps'` and `p' = 2 rho eps' + rho^2 eps''`.
pub fn pressure_from(rho: f64, deps: f64, d2eps: f64) -> (f64, f64) {
    (rho * rho * deps, 2.0 * rho * deps + rho * rho * d2eps)
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| {
                if i + 1 == count {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

impl ConvexInterpolant {
    fn float_view(&self) -> FloatView {
        let xs: Vec<f64> = self.vertices.iter().map(|v| v.rho.to_f64()).collect();
        let mut ys: Vec<f64> = self.vertices.iter().map(|v| v.deps.to_f64()).collect();
        for (g, m) in self.smoothed_levels.iter().enumerate() {
            ys[4 * g + 2] = *m;
        }
        let mut slopes = vec![self.slopes[0].to_f64()];
        for j in 0..xs.len().saturating_sub(1) {
            slopes.push((ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]));
        }
        slopes.push(self.slopes[self.slopes.len() - 1].to_f64());
        FloatView {
            lo: self.domain.0.to_f64(),
            hi: self.domain.1.to_f64(),
            h: self.smoothing_radius.to_f64(),
            xs,
            ys,
            slopes,
            eps: self.knots.iter().map(|k| k.eps.to_f64()).collect(),
        }
    }

    pub fn domain_f64(&self) -> (f64, f64) {
        (self.float.lo, self.float.hi)
    }

    /// Smallest slope of the exact skeleton; a lower bound for `eps''`.
    pub fn min_slope(&self) -> Rational {
        self.slopes
            .iter()
            .min()
            .cloned()
            .expect("at least two slopes")
    }

    /// Exact skeleton `(eps, eps')` before rounding, integrated from the first
    /// knot.
    pub fn eval_skeleton(&self, rho: &Rational) -> Result<(Rational, Rational), ConvexError> {
        let (lo, hi) = &self.domain;
        if rho < lo || rho > hi {
            return Err(ConvexError::OutOfDomain {
                rho: rho.to_f64(),
                lo: lo.to_f64(),
                hi: hi.to_f64(),
            });
        }
        let half = Rational::new(1, 2).expect("nonzero");
        let v = &self.vertices;
        let first = &v[0];
        let last = &v[v.len() - 1];
        let mut eps = self.knots[0].eps.clone();
        if rho <= &first.rho {
            let t = rho - &first.rho;
            let k = &self.slopes[0];
            return Ok((
                eps + &first.deps * &t + &half * k * &t * &t,
                &first.deps + k * &t,
            ));
        }
        for w in v.windows(2) {
            let (p, q) = (&w[0], &w[1]);
            if rho <= &q.rho {
                let t = rho - &p.rho;
                let y = &p.deps + (&q.deps - &p.deps) * &t / (&q.rho - &p.rho);
                eps += &(&half * &t * (&p.deps + &y));
                return Ok((eps, y));
            }
            eps += &(&half * (&q.rho - &p.rho) * (&p.deps + &q.deps));
        }
        let t = rho - &last.rho;
        let k = &self.slopes[self.slopes.len() - 1];
        Ok((
            eps + &last.deps * &t + &half * k * &t * &t,
            &last.deps + k * &t,
        ))
    }

    /// Smoothed `(eps, eps', eps'')` at `rho`.
    pub fn eval_energy(&self, rho: f64) -> Result<EnergyPoint, ConvexError> {
        let f = &self.float;
        if !(rho >= f.lo && rho <= f.hi) {
            return Err(ConvexError::OutOfDomain {
                rho,
                lo: f.lo,
                hi: f.hi,
            });
        }
        let n = f.xs.len();
        let (x0, xl) = (f.xs[0], f.xs[n - 1]);
        if rho <= x0 || rho >= xl || n == 1 {
            let (x, y, k, e) = if rho <= x0 {
                (x0, f.ys[0], f.slopes[0], f.eps[0])
            } else {
                (xl, f.ys[n - 1], f.slopes[n], f.eps[f.eps.len() - 1])
            };
            let t = rho - x;
            return Ok(EnergyPoint {
                eps: e + y * t + 0.5 * k * t * t,
                deps: y + k * t,
                d2eps: k,
                d2eps_lower: k,
            });
        }
        // Largest vertex not beyond rho, and the knot opening its gap.
        let j = f.xs.partition_point(|x| *x <= rho) - 1;
        let anchor = j / 4 * 4;
        let mut eps = f.eps[j / 4];
        for s in anchor..j {
            eps += 0.5 * (f.xs[s + 1] - f.xs[s]) * (f.ys[s] + f.ys[s + 1]);
        }
        let slope = f.slopes[j + 1];
        let t = rho - f.xs[j];
        let mut deps = f.ys[j] + slope * t;
        eps += 0.5 * t * (f.ys[j] + deps);
        let mut d2eps = slope;
        let mut lower = slope;
        let bp = bump();
        let h = f.h;
        for c in anchor + 1..anchor + 4 {
            let tc = (rho - f.xs[c]) / h;
            if tc <= -1.0 {
                continue;
            }
            let jump = f.slopes[c + 1] - f.slopes[c];
            eps += jump * h * h * bp.ramp_defect_integral(tc);
            if tc < 1.0 {
                deps += jump * h * bp.ramp_defect(tc);
                let step = if rho >= f.xs[c] { 1.0 } else { 0.0 };
                d2eps += jump * (bp.cdf(tc) - step);
                lower = lower.min(f.slopes[c]).min(f.slopes[c + 1]);
            }
        }
        Ok(EnergyPoint {
            eps,
            deps,
            d2eps,
            d2eps_lower: lower,
        })
    }

    /// `(p, p')` of the realized pressure law.
    pub fn pressure(&self, rho: f64) -> Result<(f64, f64), ConvexError> {
        let e = self.eval_energy(rho)?;
        Ok(pressure_from(rho, e.deps, e.d2eps))
    }

    pub fn export_pressure_table(&self, rhos: &[f64]) -> Result<Vec<PressureRow>, ConvexError> {
        rhos.iter()
            .map(|&rho| {
                let e = self.eval_energy(rho)?;
                let (p, dp) = pressure_from(rho, e.deps, e.d2eps);
                Ok(PressureRow {
                    rho,
                    eps: e.eps,
                    deps: e.deps,
                    p,
                    dp,
                })
            })
            .collect()
    }

    /// Evenly spaced grid over the whole domain.
    pub fn domain_grid(&self, count: usize) -> Vec<f64> {
        grid(self.float.lo, self.float.hi, count)
    }
}

pub fn pressure_table_csv(rows: &[PressureRow]) -> String {
    let mut out = String::from("rho,eps,deps,p,dp\n");
    for r in rows {
        out.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e}\n",
            r.rho, r.eps, r.deps, r.p, r.dp
        ));
    }
    out
}
