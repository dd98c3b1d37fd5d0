//! Local method: maximize the smallest margin `s` subject to the jump
//! relations, by an l1-penalty SQP with a trust region.
//!
//! Each step solves the convex QP
//!
//! ```text
//! min  -ds + dz'B dz/2 + mu (sum p + sum q + sum t)
//!      c + J dz = p - q,   g + G dz - s - ds + t >= 0,   s + ds <= cap,
//!      |dz| <= radius,     rho + d rho >= floor,        p, q, t >= 0
//! ```
//!
//! in variables scaled by the bounds table, with `B` the exact Hessian of the
//! Lagrangian pushed to positive definite. Steps are accepted on the ratio of
//! actual to predicted decrease of the merit `-s + mu (|c|_1 + |(s - g)+|_1)`.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::jet::Jet2;
use super::layout::Layout;
use crate::exactnum::{Dual, Scalar};
use crate::fan_model::FanConfiguration;
use crate::system::equality_residuals;

/// Division for the scalar kinds the local method differentiates with.
pub(crate) trait Quotient: Scalar {
    fn val(&self) -> f64;
    fn over(self, d: &Self) -> Self;
}

impl Quotient for f64 {
    fn val(&self) -> f64 {
        *self
    }
    fn over(self, d: &f64) -> f64 {
        self / d
    }
}

impl Quotient for Dual<f64> {
    fn val(&self) -> f64 {
        self.value
    }
    fn over(self, d: &Self) -> Self {
        let q = self.value / d.value;
        let n = self.grad.len().max(d.grad.len());
        let grad = if n == 0 {
            Vec::new()
        } else {
            (0..n)
                .map(|i| (self.partial(i) - q * d.partial(i)) / d.value)
                .collect()
        };
        Dual { value: q, grad }
    }
}

impl Quotient for Jet2 {
    fn val(&self) -> f64 {
        self.value
    }
    fn over(self, d: &Self) -> Self {
        let q = self.value / d.value;
        if d.grad.is_empty() {
            return self * Jet2::constant(1.0 / d.value);
        }
        let n = d.grad.len();
        let ga = |i: usize| self.grad.get(i).copied().unwrap_or(0.0);
        let ha = |k: usize| self.hess.get(k).copied().unwrap_or(0.0);
        let grad: Vec<f64> = (0..n).map(|i| (ga(i) - q * d.grad[i]) / d.value).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                hess[k] =
                    (ha(k) - q * d.hess[k] - grad[i] * d.grad[j] - d.grad[i] * grad[j]) / d.value;
            }
        }
        Jet2 {
            value: q,
            grad,
            hess,
        }
    }
}

const ENTROPY_WEIGHT: i64 = 100;

pub(crate) struct Problem {
    pub layout: Layout,
    pub scales: Vec<f64>,
    /// Per-residual divisors: mass, first and second momentum.
    pub row_scales: Vec<f64>,
    pub cap: f64,
    pub rho_floor: f64,
}

pub(crate) struct FirstOrder {
    pub r: Vec<f64>,
    pub jr: DMatrix<f64>,
    pub g: Vec<f64>,
    pub jg: DMatrix<f64>,
}

impl Problem {
    pub fn new(layout: Layout, scales: Vec<f64>, cap: f64, rho_floor: f64) -> Self {
        let row_scales = (0..=layout.n).flat_map(|_| [5e2, 1e4, 5e4]).collect();
        Problem {
            layout,
            scales,
            row_scales,
            cap,
            rho_floor,
        }
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn to_x(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.scales).map(|(a, b)| a * b).collect()
    }

    pub fn to_z(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.scales).map(|(a, b)| a / b).collect()
    }

    pub fn config(&self, z: &[f64]) -> FanConfiguration<f64> {
        self.layout.unpack(&self.to_x(z), |v| v)
    }

    /// Jump residuals and margins brought to comparable sizes. Each
    /// determinant margin is divided by one plus its (positive) trace margin:
    /// both being at least `s >= 0` still forces the determinant above
    /// `s (s + 1)`, and the quotient grows like the smaller eigenvalue instead
    /// of like its square. Entropy margins are divided by `ENTROPY_WEIGHT`.
    pub fn system<S: Quotient>(&self, x: &[S], konst: impl Fn(f64) -> S) -> (Vec<S>, Vec<S>) {
        let (r, mut g) = self.layout.system(x, konst);
        let n = self.layout.n;
        for i in 0..n {
            let tr = &g[2 * i];
            if tr.val() > 0.0 {
                let d = tr.clone() + S::one();
                g[2 * i + 1] = g[2 * i + 1].clone().over(&d);
            }
        }
        let w = S::from_i64(ENTROPY_WEIGHT);
        for e in &mut g[2 * n..3 * n + 1] {
            *e = e.clone().over(&w);
        }
        (r, g)
    }

    /// Smallest unweighted margin.
    pub fn raw_min_margin(&self, z: &[f64]) -> f64 {
        let (_, g) = self.layout.system(&self.to_x(z), |v| v);
        min_margin(&g)
    }

    /// Scaled residuals and margins.
    pub fn values(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (r, g) = self.system(&self.to_x(z), |v| v);
        (self.scale_rows(r), g)
    }

    fn scale_rows(&self, r: Vec<f64>) -> Vec<f64> {
        r.into_iter()
            .zip(&self.row_scales)
            .map(|(a, b)| a / b)
            .collect()
    }

    pub fn first_order(&self, z: &[f64]) -> FirstOrder {
        let n = self.dim();
        let x: Vec<Dual<f64>> = z
            .iter()
            .zip(&self.scales)
            .enumerate()
            .map(|(k, (zk, sk))| {
                let mut grad = vec![0.0; n];
                grad[k] = *sk;
                Dual {
                    value: zk * sk,
                    grad,
                }
            })
            .collect();
        let (r, g) = self.system(&x, Dual::constant);
        let jr = DMatrix::from_fn(r.len(), n, |i, j| r[i].partial(j) / self.row_scales[i]);
        let jg = DMatrix::from_fn(g.len(), n, |i, j| g[i].partial(j));
        FirstOrder {
            r: r.iter()
                .zip(&self.row_scales)
                .map(|(a, b)| a.value / b)
                .collect(),
            jr,
            g: g.iter().map(|a| a.value).collect(),
            jg,
        }
    }

    /// Hessian of `sum lr_i c_i - sum lg_j g_j` in scaled variables.
    pub fn lagrangian_hessian(&self, z: &[f64], lr: &[f64], lg: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let x: Vec<Jet2> = z
            .iter()
            .zip(&self.scales)
            .enumerate()
            .map(|(k, (zk, sk))| Jet2::scaled_variable(*zk, *sk, k, n))
            .collect();
        let (r, g) = self.system(&x, Jet2::constant);
        let mut h = DMatrix::zeros(n, n);
        let mut add = |f: &Jet2, w: f64| {
            if w == 0.0 || f.hess.is_empty() {
                return;
            }
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] += w * f.hess[i * n + j];
                }
            }
        };
        for (i, f) in r.iter().enumerate() {
            add(f, lr[i] / self.row_scales[i]);
        }
        for (j, f) in g.iter().enumerate() {
            add(f, -lg[j]);
        }
        h
    }

    /// Residuals of the float configuration evaluated exactly, in raw units.
    pub fn exact_residuals(&self, z: &[f64]) -> Option<Vec<f64>> {
        let cfg = self.config(z).to_rational().ok()?;
        Some(
            equality_residuals(&cfg)
                .into_iter()
                .map(|e| e.value.to_f64())
                .collect(),
        )
    }
}

fn merit(r: &[f64], g: &[f64], s: f64, mu: f64) -> f64 {
    let infeas: f64 =
        r.iter().map(|v| v.abs()).sum::<f64>() + g.iter().map(|gj| (s - gj).max(0.0)).sum::<f64>();
    -s + mu * infeas
}

fn min_margin(g: &[f64]) -> f64 {
    g.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Symmetric part with eigenvalues lifted to a small positive floor.
fn convexify(h: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let big = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = 1e-8 * big.max(1.0);
    let lifted = eig.eigenvalues.map(|v| v.max(floor));
    &eig.eigenvectors * DMatrix::from_diagonal(&lifted) * eig.eigenvectors.transpose()
}

struct QpStep {
    dz: Vec<f64>,
    ds: f64,
    lam_r: Vec<f64>,
    lam_g: Vec<f64>,
    /// Total of the elastic variables.
    elastic: f64,
}

fn qp_step(
    p: &Problem,
    z: &[f64],
    s: f64,
    fo: &FirstOrder,
    b: &DMatrix<f64>,
    radius: f64,
    mu: f64,
) -> Option<QpStep> {
    let n = p.dim();
    let me = fo.r.len();
    let mi = fo.g.len();
    let rho_idx = p.layout.rho_indices();
    let nw = n + 1 + 2 * me + mi;
    let (ids, ip, iq, it) = (n, n + 1, n + 1 + me, n + 1 + 2 * me);

    let mut pm = vec![vec![0.0; nw]; nw];
    for i in 0..n {
        for j in i..n {
            pm[i][j] = b[(i, j)];
        }
    }
    let mut q = vec![0.0; nw];
    q[ids] = -1.0;
    for v in q.iter_mut().skip(ip) {
        *v = mu;
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..me {
        let mut row = vec![0.0; nw];
        for j in 0..n {
            row[j] = fo.jr[(i, j)];
        }
        row[ip + i] = -1.0;
        row[iq + i] = 1.0;
        rows.push(row);
        rhs.push(-fo.r[i]);
    }
    for jx in 0..mi {
        let mut row = vec![0.0; nw];
        for j in 0..n {
            row[j] = -fo.jg[(jx, j)];
        }
        row[ids] = 1.0;
        row[it + jx] = -1.0;
        rows.push(row);
        rhs.push(fo.g[jx] - s);
    }
    let mut push = |idx: usize, coef: f64, bound: f64| {
        let mut row = vec![0.0; nw];
        row[idx] = coef;
        rows.push(row);
        rhs.push(bound);
    };
    push(ids, 1.0, p.cap - s);
    for k in ip..nw {
        push(k, -1.0, 0.0);
    }
    for k in 0..n {
        push(k, 1.0, radius);
        push(k, -1.0, radius);
    }
    for &k in &rho_idx {
        push(k, -1.0, z[k] - p.rho_floor / p.scales[k]);
    }

    let pmat = CscMatrix::from(&pm);
    let amat = CscMatrix::from(&rows);
    let cones = [
        SupportedConeT::ZeroConeT(me),
        SupportedConeT::NonnegativeConeT(rows.len() - me),
    ];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .build()
        .ok()?;
    let mut solver = DefaultSolver::new(&pmat, &q, &amat, &rhs, &cones, settings).ok()?;
    solver.solve();
    let sol = &solver.solution;
    if !matches!(
        sol.status,
        SolverStatus::Solved | SolverStatus::AlmostSolved
    ) {
        return None;
    }
    if sol.x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(QpStep {
        dz: sol.x[..n].to_vec(),
        ds: sol.x[ids],
        lam_r: sol.z[..me].to_vec(),
        lam_g: sol.z[me..me + mi].to_vec(),
        elastic: sol.x[ip..].iter().map(|v| v.max(0.0)).sum(),
    })
}

fn model_decrease(fo: &FirstOrder, b: &DMatrix<f64>, s: f64, mu: f64, dz: &[f64], ds: f64) -> f64 {
    let d = DVector::from_column_slice(dz);
    let lr = &fo.jr * &d;
    let lg = &fo.jg * &d;
    let r_lin: Vec<f64> = fo.r.iter().zip(lr.iter()).map(|(a, b)| a + b).collect();
    let g_lin: Vec<f64> = fo.g.iter().zip(lg.iter()).map(|(a, b)| a + b).collect();
    let quad = 0.5 * d.dot(&(b * &d));
    merit(&fo.r, &fo.g, s, mu) - (merit(&r_lin, &g_lin, s + ds, mu) + quad)
}

/// Minimum-norm Newton step on the scaled residuals.
fn newton_correction(jr: &DMatrix<f64>, r: &[f64]) -> Option<Vec<f64>> {
    let svd = jr.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, v| a.max(*v));
    let rhs = DVector::from_iterator(r.len(), r.iter().map(|v| -v));
    let dz = svd.solve(&rhs, 1e-12 * smax.max(1e-300)).ok()?;
    Some(dz.iter().copied().collect())
}

pub(crate) struct LocalOutcome {
    pub z: Vec<f64>,
    pub iterations: usize,
}

/// Largest raw residual magnitude at which the SQP hands over to the polish.
const HANDOVER: f64 = 1e-9;

pub(crate) fn local_solve(
    p: &Problem,
    z0: &[f64],
    max_iter: usize,
    deadline: Option<Instant>,
    settle: f64,
    mut done: impl FnMut(&[f64]) -> bool,
) -> LocalOutcome {
    let n = p.dim();
    let mut z = z0.to_vec();
    for &k in &p.layout.rho_indices() {
        z[k] = z[k].max(2.0 * p.rho_floor / p.scales[k]);
    }
    let mut fo = p.first_order(&z);
    let mut s = p.cap.min(min_margin(&fo.g));
    let mut b = DMatrix::<f64>::identity(n, n) * 1e-6;
    let mut radius = 0.1;
    let mut mu = 10.0;
    let mut iterations = 0;
    while iterations < max_iter {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let raw_res =
            fo.r.iter()
                .zip(&p.row_scales)
                .fold(0.0f64, |a, (v, w)| a.max((v * w).abs()));
        if raw_res <= HANDOVER && s >= p.cap - 1e-12 {
            break;
        }
        iterations += 1;
        let Some(step) = qp_step(p, &z, s, &fo, &b, radius, mu) else {
            radius *= 0.25;
            if radius < 1e-12 {
                break;
            }
            continue;
        };
        let pred = model_decrease(&fo, &b, s, mu, &step.dz, step.ds);
        let phi0 = merit(&fo.r, &fo.g, s, mu);
        if pred <= 1e-15 * (1.0 + phi0.abs()) {
            break;
        }
        let step_len = step.dz.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let trial: Vec<f64> = z.iter().zip(&step.dz).map(|(a, b)| a + b).collect();
        let (rt, gt) = p.values(&trial);
        let mut ratio = (phi0 - merit(&rt, &gt, s + step.ds, mu)) / pred;
        let mut accepted = (ratio >= 0.1).then_some(trial.clone());
        if ratio < 0.75 {
            // Second-order correction: pull the equalities and the margins
            // the step relies on back to their linearised values.
            let d = DVector::from_column_slice(&step.dz);
            let g_lin = &fo.jg * &d + DVector::from_column_slice(&fo.g);
            let floor = s + step.ds + 1e-9 * (1.0 + s.abs());
            let active: Vec<usize> = (0..fo.g.len()).filter(|&j| g_lin[j] <= floor).collect();
            let rows = fo.r.len() + active.len();
            let jac = DMatrix::from_fn(rows, p.dim(), |i, k| {
                if i < fo.r.len() {
                    fo.jr[(i, k)]
                } else {
                    fo.jg[(active[i - fo.r.len()], k)]
                }
            });
            let gap: Vec<f64> = rt
                .iter()
                .copied()
                .chain(active.iter().map(|&j| gt[j] - g_lin[j]))
                .collect();
            if let Some(c) = newton_correction(&jac, &gap) {
                let soc: Vec<f64> = trial.iter().zip(&c).map(|(a, b)| a + b).collect();
                let far = soc
                    .iter()
                    .zip(&z)
                    .any(|(a, b)| (a - b).abs() > 1.5 * radius);
                if !far {
                    let (rs, gs) = p.values(&soc);
                    let r2 = (phi0 - merit(&rs, &gs, s + step.ds, mu)) / pred;
                    if r2 >= 0.1 && r2 > ratio {
                        ratio = r2;
                        accepted = Some(soc);
                    }
                }
            }
        }
        if let Some(znew) = accepted {
            z = znew;
            fo = p.first_order(&z);
            s = p.cap.min(min_margin(&fo.g));
            if p.raw_min_margin(&z) >= settle && done(&z) {
                break;
            }
            if ratio > 0.5 && step_len >= 0.9 * radius {
                radius = (2.0 * radius).min(10.0);
            }
        } else {
            radius = 0.25 * step_len.min(radius);
            if radius < 1e-12 {
                break;
            }
        }
        b = convexify(&p.lagrangian_hessian(&z, &step.lam_r, &step.lam_g));
        let lmax = step
            .lam_r
            .iter()
            .chain(&step.lam_g)
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if step.elastic > 1e-9 {
            if lmax > 0.5 * mu {
                mu = (2.0 * mu).min(1e8);
            }
        } else {
            // Multipliers of a non-elastic step are genuine estimates; a
            // penalty far above them only amplifies rounding in the merit.
            mu = mu.min((4.0 * lmax).max(10.0));
        }
    }
    LocalOutcome { z, iterations }
}

/// Newton iterations on the jump relations with residuals computed exactly
/// from the float point; returns the point with the smallest exact residual.
pub(crate) fn polish(p: &Problem, z0: &[f64], rounds: usize) -> (Vec<f64>, f64) {
    let mut z = z0.to_vec();
    let mut best = (z.clone(), f64::INFINITY);
    for _ in 0..=rounds {
        let Some(r) = p.exact_residuals(&z) else {
            break;
        };
        let m = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m < best.1 {
            best = (z.clone(), m);
        } else {
            break;
        }
        if m < 1e-14 {
            break;
        }
        let fo = p.first_order(&z);
        let scaled: Vec<f64> = r.iter().zip(&p.row_scales).map(|(a, b)| a / b).collect();
        let Some(dz) = newton_correction(&fo.jr, &scaled) else {
            break;
        };
        z = z.iter().zip(&dz).map(|(a, b)| a + b).collect();
    }
    best
}
