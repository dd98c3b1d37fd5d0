//! Numerical search for fan configurations satisfying the jump relations with
//! every strict inequality above a target margin, and random sweeps over
//! Riemann data.

mod jet;
mod layout;
mod sqp;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exactnum::Rational;
use crate::fan_model::{FanConfiguration, ModelError, RiemannDatum};
use crate::system::{equality_residuals, inequality_margins_with, BoundsTable};
use layout::Layout;
use sqp::{local_solve, polish, Problem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid solver options: {0}")]
    Options(String),
    #[error("initial guess has {found} waves, expected {expected}")]
    GuessShape { expected: usize, found: usize },
    #[error("the two-wave probe needs a contact datum (rho+ = rho-, v+2 = v-2)")]
    NotContact,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub n_waves: usize,
    pub target_margin: f64,
    pub equality_tolerance: f64,
    /// Further starting points after the first.
    pub max_restarts: usize,
    pub rng_seed: u64,
    /// Magnitudes of the random starting box.
    pub init_box: BoundsTable,
    pub time_budget: Option<Duration>,
    /// Local iterations per start.
    pub max_iterations: usize,
    /// First starting point; its datum is replaced by the one being solved.
    pub initial_guess: Option<FanConfiguration<f64>>,
    /// Treat the right outer state as its own convexity knot when `rho+ != rho-`.
    /// Off by default: the energy table is then required to be convex over
    /// `rho-` and the wave densities only.
    pub include_right_knot: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            n_waves: 3,
            target_margin: 1.0 / 3.0,
            equality_tolerance: 1e-11,
            max_restarts: 10,
            rng_seed: 0,
            init_box: BoundsTable::default(),
            time_budget: None,
            max_iterations: 400,
            initial_guess: None,
            include_right_knot: false,
        }
    }
}

impl SolveOptions {
    fn validate(&self) -> Result<(), SolveError> {
        if self.n_waves == 0 {
            return Err(SolveError::Options("n_waves must be at least 1".into()));
        }
        if !(self.target_margin >= 0.0) {
            return Err(SolveError::Options(
                "target_margin must be non-negative".into(),
            ));
        }
        if !(self.equality_tolerance > 0.0) {
            return Err(SolveError::Options(
                "equality_tolerance must be positive".into(),
            ));
        }
        if let Some(g) = &self.initial_guess {
            g.check_shape()?;
            if g.n_waves() != self.n_waves {
                return Err(SolveError::GuessShape {
                    expected: self.n_waves,
                    found: g.n_waves(),
                });
            }
        }
        Ok(())
    }
}

/// Exact evaluation of a float configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub max_abs_residual: f64,
    pub min_margin: f64,
    /// `max(max |residual|, max(0, target - min margin))`.
    pub feasibility_score: f64,
    pub converged: bool,
}

/// Score of `cfg` with residuals and margins computed exactly from its float
/// values. Non-finite input scores infinity.
pub fn score(
    cfg: &FanConfiguration<f64>,
    target_margin: f64,
    equality_tolerance: f64,
    include_right_knot: bool,
) -> Score {
    let bad = Score {
        max_abs_residual: f64::INFINITY,
        min_margin: f64::NEG_INFINITY,
        feasibility_score: f64::INFINITY,
        converged: false,
    };
    if cfg.check_shape().is_err() {
        return bad;
    }
    let Ok(exact) = cfg.to_rational() else {
        return bad;
    };
    let plus_knot = include_right_knot && exact.datum.rho_plus != exact.datum.rho_minus;
    let max_res = equality_residuals(&exact)
        .into_iter()
        .map(|e| e.value.abs())
        .max()
        .unwrap_or_else(Rational::zero);
    let min_margin = inequality_margins_with(&exact, plus_knot)
        .into_iter()
        .map(|e| e.value)
        .min()
        .unwrap_or_else(Rational::zero);
    let (res_f, margin_f) = (max_res.to_f64(), min_margin.to_f64());
    let converged = match (
        Rational::from_f64(equality_tolerance),
        Rational::from_f64(target_margin),
    ) {
        (Ok(tol), Ok(target)) => max_res <= tol && min_margin >= target,
        _ => false,
    };
    Score {
        max_abs_residual: res_f,
        min_margin: margin_f,
        feasibility_score: res_f.max((target_margin - margin_f).max(0.0)),
        converged,
    }
}

pub fn feasibility_score(cfg: &FanConfiguration<f64>, target_margin: f64) -> f64 {
    score(cfg, target_margin, f64::MIN_POSITIVE, true).feasibility_score
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveOutcome {
    pub config: FanConfiguration<f64>,
    pub feasibility_score: f64,
    pub max_abs_residual: f64,
    pub min_margin: f64,
    pub restarts_used: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Smallest-margin target of the local method: comfortably above the
/// requested margin so rounding and polishing cannot push it below.
fn margin_cap(target: f64) -> f64 {
    2.0 * target + 0.25
}

const RHO_FLOOR: f64 = 1e-3;

fn with_datum(guess: &FanConfiguration<f64>, datum: &RiemannDatum<f64>) -> FanConfiguration<f64> {
    let mut c = guess.clone();
    c.datum = datum.clone();
    if datum.rho_plus == datum.rho_minus {
        c.thermo.eps_plus = c.thermo.eps_minus;
        c.thermo.deps_plus = c.thermo.deps_minus;
    }
    c
}

fn outcome_of(
    cfg: FanConfiguration<f64>,
    opts: &SolveOptions,
    restarts: usize,
    iterations: usize,
) -> SolveOutcome {
    let s = score(
        &cfg,
        opts.target_margin,
        opts.equality_tolerance,
        opts.include_right_knot,
    );
    SolveOutcome {
        config: cfg,
        feasibility_score: s.feasibility_score,
        max_abs_residual: s.max_abs_residual,
        min_margin: s.min_margin,
        restarts_used: restarts,
        iterations,
        converged: s.converged,
    }
}

fn better(a: &SolveOutcome, b: &SolveOutcome) -> bool {
    (a.converged && !b.converged)
        || (a.converged == b.converged && a.feasibility_score < b.feasibility_score)
}

fn solver_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// One local run from `start`, polished when it ends near feasibility.
fn run_from(
    problem: &Problem,
    start: &FanConfiguration<f64>,
    opts: &SolveOptions,
    deadline: Option<Instant>,
    restart: usize,
) -> SolveOutcome {
    let initial = outcome_of(start.clone(), opts, restart, 0);
    if initial.converged || opts.max_iterations == 0 {
        return initial;
    }
    let z0 = problem.to_z(&problem.layout.pack(start));
    let mut found: Option<FanConfiguration<f64>> = None;
    let settle = opts.target_margin + 0.05;
    let local = local_solve(problem, &z0, opts.max_iterations, deadline, settle, |z| {
        let (zp, res) = polish(problem, z, 6);
        if res > opts.equality_tolerance {
            return false;
        }
        let cfg = problem.config(&zp);
        let ok = score(
            &cfg,
            opts.target_margin,
            opts.equality_tolerance,
            opts.include_right_knot,
        )
        .converged;
        if ok {
            found = Some(cfg);
        }
        ok
    });
    let cfg = found.unwrap_or_else(|| problem.config(&polish(problem, &local.z, 6).0));
    let out = outcome_of(cfg, opts, restart, local.iterations);
    if better(&out, &initial) {
        out
    } else {
        SolveOutcome {
            iterations: local.iterations,
            ..initial
        }
    }
}

/// Best outcome over the initial guess (if any) and random restarts.
pub fn solve(datum: &RiemannDatum<f64>, opts: &SolveOptions) -> Result<SolveOutcome, SolveError> {
    datum.validate()?;
    opts.validate()?;
    let deadline = opts.time_budget.map(|d| Instant::now() + d);
    let layout = Layout::new(datum, opts.n_waves, opts.include_right_knot);
    let scales = layout.scales(&opts.init_box);
    let problem = Problem::new(layout, scales, margin_cap(opts.target_margin), RHO_FLOOR);
    let mut rng = solver_rng(opts.rng_seed);
    let mut best: Option<SolveOutcome> = None;
    for attempt in 0..=opts.max_restarts {
        if attempt > 0 && deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let start = match (&opts.initial_guess, attempt) {
            (Some(g), 0) => with_datum(g, datum),
            _ => problem.layout.random_start(&opts.init_box, &mut rng),
        };
        let out = run_from(&problem, &start, opts, deadline, attempt);
        let done = out.converged;
        if best.as_ref().map_or(true, |b| better(&out, b)) {
            best = Some(out);
        }
        if done {
            break;
        }
    }
    Ok(best.expect("at least one attempt"))
}

/// Riemann datum drawn uniformly from boxes of half-width `halfwidth` around
/// the components of `base`.
pub fn sample_datum(
    base: &RiemannDatum<f64>,
    halfwidth: f64,
    rng: &mut impl Rng,
) -> RiemannDatum<f64> {
    let mut u = |c: f64| c + halfwidth * (2.0 * rng.gen::<f64>() - 1.0);
    RiemannDatum {
        rho_minus: u(base.rho_minus),
        rho_plus: u(base.rho_plus),
        v_minus: [u(base.v_minus[0]), u(base.v_minus[1])],
        v_plus: [u(base.v_plus[0]), u(base.v_plus[1])],
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub seed: u64,
    pub datum: RiemannDatum<f64>,
    pub feasibility_score: f64,
    pub max_abs_residual: f64,
    pub min_margin: f64,
    pub restarts_used: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub base: RiemannDatum<f64>,
    pub halfwidth: f64,
    pub count: usize,
    pub seed: u64,
    pub success_count: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "index,seed,rho_minus,rho_plus,v_minus_1,v_minus_2,v_plus_1,v_plus_2,score,max_abs_residual,min_margin,restarts,converged\n",
        );
        for r in &self.rows {
            let d = &r.datum;
            out.push_str(&format!(
                "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:e},{:e},{:?},{},{}\n",
                r.index,
                r.seed,
                d.rho_minus,
                d.rho_plus,
                d.v_minus[0],
                d.v_minus[1],
                d.v_plus[0],
                d.v_plus[1],
                r.feasibility_score,
                r.max_abs_residual,
                r.min_margin,
                r.restarts_used,
                r.converged
            ));
        }
        out
    }
}

/// Solve `count` random problems around `base`. Sample `i` uses seed
/// `opts.rng_seed + i` for both its datum and its restarts, so the report
/// does not depend on scheduling.
pub fn sweep(
    base: &RiemannDatum<f64>,
    halfwidth: f64,
    count: usize,
    opts: &SolveOptions,
) -> Result<SweepReport, SolveError> {
    if !(halfwidth >= 0.0) {
        return Err(SolveError::Options("halfwidth must be non-negative".into()));
    }
    opts.validate()?;
    let rows: Vec<SweepRow> = (0..count)
        .into_par_iter()
        .map(|index| {
            let seed = opts.rng_seed.wrapping_add(index as u64);
            let datum = sample_datum(base, halfwidth, &mut ChaCha8Rng::seed_from_u64(seed));
            let sample_opts = SolveOptions {
                rng_seed: seed,
                ..opts.clone()
            };
            match solve(&datum, &sample_opts) {
                Ok(o) => SweepRow {
                    index,
                    seed,
                    datum,
                    feasibility_score: o.feasibility_score,
                    max_abs_residual: o.max_abs_residual,
                    min_margin: o.min_margin,
                    restarts_used: o.restarts_used,
                    converged: o.converged,
                },
                Err(_) => SweepRow {
                    index,
                    seed,
                    datum,
                    feasibility_score: f64::INFINITY,
                    max_abs_residual: f64::INFINITY,
                    min_margin: f64::NEG_INFINITY,
                    restarts_used: 0,
                    converged: false,
                },
            }
        })
        .collect();
    Ok(SweepReport {
        base: base.clone(),
        halfwidth,
        count,
        seed: opts.rng_seed,
        success_count: rows.iter().filter(|r| r.converged).count(),
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub best_score: f64,
    pub scores: Vec<f64>,
    pub best: FanConfiguration<f64>,
}

/// Search for a single-wave subsolution of a contact datum from
/// `opts.max_restarts` starts and report every score.
pub fn two_wave_probe(
    datum: &RiemannDatum<f64>,
    opts: &SolveOptions,
) -> Result<ProbeReport, SolveError> {
    datum.validate()?;
    if !datum.is_contact() {
        return Err(SolveError::NotContact);
    }
    let opts = SolveOptions {
        n_waves: 1,
        ..opts.clone()
    };
    opts.validate()?;
    let deadline = opts.time_budget.map(|d| Instant::now() + d);
    let layout = Layout::new(datum, 1, opts.include_right_knot);
    let scales = layout.scales(&opts.init_box);
    let problem = Problem::new(layout, scales, margin_cap(opts.target_margin), RHO_FLOOR);
    let mut rng = solver_rng(opts.rng_seed);
    let mut scores = Vec::new();
    let mut best: Option<SolveOutcome> = None;
    for attempt in 0..opts.max_restarts.max(1) {
        let start = match (&opts.initial_guess, attempt) {
            (Some(g), 0) => with_datum(g, datum),
            _ => problem.layout.random_start(&opts.init_box, &mut rng),
        };
        let out = run_from(&problem, &start, &opts, deadline, attempt);
        scores.push(out.feasibility_score);
        if best.as_ref().map_or(true, |b| better(&out, b)) {
            best = Some(out);
        }
    }
    let best = best.expect("at least one attempt");
    Ok(ProbeReport {
        best_score: best.feasibility_score,
        scores,
        best: best.config,
    })
}

/// Configuration whose regions all carry the left ghost state, with unit
/// speed gaps and a flat energy table: it satisfies every jump relation of a
/// constant datum but has no strict margins.
pub fn ghost_configuration(
    datum: &RiemannDatum<f64>,
    n: usize,
) -> Result<FanConfiguration<f64>, SolveError> {
    let g = crate::fan_model::ghost_state(&datum.v_minus, &datum.rho_minus)?;
    Ok(FanConfiguration {
        datum: datum.clone(),
        speeds: (0..=n).map(|k| k as f64).collect(),
        states: vec![g; n],
        thermo: crate::fan_model::ThermoTable {
            eps_minus: 0.0,
            eps_plus: 0.0,
            deps_minus: 1.0,
            deps_plus: 1.0,
            eps: vec![0.0; n],
            deps: vec![1.0; n],
        },
    })
}
