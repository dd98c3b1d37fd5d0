mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fansub_core::certify::{certify_existence, CertifyError, IFTCertificate};
use fansub_core::convexify::{build, knots_from_config, BuildOptions, ConvexError};
use fansub_core::correction::{correct_exact, CorrectionError};
use fansub_core::document::{read_config, write_config, DocumentError};
use fansub_core::exactnum::Rational;
use fansub_core::fan_model::{FanConfiguration, RiemannDatum};
use fansub_core::solver::{self, SolveError, SolveOptions, SolveOutcome};
use fansub_core::system::{
    bounds_check, check_conclusions, evaluate, is_corrected_interface, BoundsTable, EqLabel,
    EvalOptions,
};
use fansub_core::witness::builtin_witness;

use report::{line, verify_report, Render, Verdicts};

#[derive(Parser)]
#[command(
    name = "fansub",
    version,
    about = "Search, correct and certify fan subsolutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration against the jump relations, margins and bounds.
    Verify(VerifyArgs),
    /// Search for a configuration for the datum of a configuration.
    Solve(SolveArgs),
    /// Solve many random data around a base datum and write a CSV row for each.
    Sweep(SweepArgs),
    /// Make the left and inner jump relations exact.
    Correct(CorrectArgs),
    /// Certify that an exact solution exists next to a corrected configuration.
    Certify(CertifyArgs),
    /// Build a convex energy through the configuration's energy table.
    Convexify(ConvexifyArgs),
    /// Solve, correct, certify and convexify in one go.
    Pipeline(PipelineArgs),
    /// Look for a single-region configuration of a contact datum.
    Probe(ProbeArgs),
    /// Interface lines x2 = nu t for plotting.
    ExportFan(ExportFanArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    AppendixB,
}

#[derive(Args)]
struct Source {
    /// Configuration document (JSON).
    #[arg(required_unless_present = "builtin")]
    path: Option<PathBuf>,
    /// Use an embedded configuration instead of a file.
    #[arg(long, value_enum, conflicts_with = "path")]
    builtin: Option<Builtin>,
}

impl Source {
    fn load(&self) -> Result<FanConfiguration<Rational>> {
        match (&self.builtin, &self.path) {
            (Some(Builtin::AppendixB), _) => Ok(builtin_witness()),
            (None, Some(p)) => {
                let text =
                    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let cfg = read_config(&text).with_context(|| format!("parsing {}", p.display()))?;
                cfg.validate()
                    .map_err(|e| Usage(format!("{}: {e}", p.display())))?;
                Ok(cfg)
            }
            (None, None) => Err(Usage("no configuration given".into()).into()),
        }
    }
}

#[derive(Args)]
struct Knot {
    /// Treat the right outer state as its own convexity knot when rho+ != rho-.
    #[arg(long)]
    right_knot: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Rational arithmetic (default).
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Binary64 arithmetic.
    #[arg(long)]
    float: bool,
    #[arg(long, default_value = "1/3")]
    margin_floor: String,
    /// Bound on the relations the correction step does not make exact.
    #[arg(long, default_value = "1e-11")]
    tolerance: String,
    /// Also require the contact identities rho+ = rho-, eps+ = eps-, eps'+ = eps'-, v+2 = v-2.
    #[arg(long)]
    contact: bool,
    #[command(flatten)]
    knot: Knot,
    /// Write the full report as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    /// Number of wave regions; defaults to the source configuration's.
    #[arg(long)]
    n_waves: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    target: f64,
    #[arg(long, default_value_t = 1e-11)]
    equality_tolerance: f64,
    #[arg(long, default_value_t = 400)]
    max_iterations: usize,
    /// Wall-clock limit per problem in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Start from random points only, not from the source configuration.
    #[arg(long)]
    cold: bool,
    #[command(flatten)]
    knot: Knot,
}

impl SearchArgs {
    fn options(&self, source: &FanConfiguration<Rational>) -> Result<SolveOptions> {
        let n_waves = self.n_waves.unwrap_or(source.n_waves());
        let warm = !self.cold && n_waves == source.n_waves();
        if let Some(t) = self.time_budget {
            if !(t > 0.0 && t.is_finite()) {
                return Err(
                    Usage("--time-budget must be a positive number of seconds".into()).into(),
                );
            }
        }
        Ok(SolveOptions {
            n_waves,
            target_margin: self.target,
            equality_tolerance: self.equality_tolerance,
            max_restarts: self.restarts,
            rng_seed: self.seed,
            time_budget: self.time_budget.map(Duration::from_secs_f64),
            max_iterations: self.max_iterations,
            initial_guess: warm.then(|| source.to_f64()),
            include_right_knot: self.knot.right_knot,
            ..SolveOptions::default()
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    search: SearchArgs,
    /// Write the best configuration found.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value_t = 0.5)]
    halfwidth: f64,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// CSV output; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CorrectArgs {
    #[command(flatten)]
    source: Source,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    knot: Knot,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ConvexifyArgs {
    #[command(flatten)]
    source: Source,
    /// Grid points for the positivity check and the pressure table.
    #[arg(long, default_value_t = 10_000)]
    grid: usize,
    /// Interpolant as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Pressure table as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, default_value = "1/3")]
    margin_floor: String,
    #[arg(long, default_value_t = 10_000)]
    grid: usize,
    /// Certificate bundle as JSON.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 400)]
    max_iterations: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportFanArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "1")]
    t: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Bad input that is not a parse error of a document.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn rational_arg(name: &str, s: &str) -> Result<Rational> {
    s.parse()
        .map_err(|e| Usage(format!("--{name} {s:?}: {e}")).into())
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports always serialize");
    s.push('\n');
    s
}

fn eval_options(contact: bool, knot: &Knot) -> EvalOptions {
    EvalOptions {
        contact,
        include_right_knot: knot.right_knot,
    }
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let cfg = a.source.load()?;
    let floor = rational_arg("margin-floor", &a.margin_floor)?;
    let tol = rational_arg("tolerance", &a.tolerance)?;
    let opts = eval_options(a.contact, &a.knot);
    let table = BoundsTable::default();
    let report = if a.float {
        let f = cfg.to_f64();
        let (floor, tol) = (floor.to_f64(), tol.to_f64());
        let r = evaluate(&f, &floor, &opts);
        let n = f.n_waves();
        let mut corrected_exact = true;
        let mut approximate_ok = true;
        for e in &r.equalities {
            match e.label {
                EqLabel::Jump(i, _) if !is_corrected_interface(i, n) => {
                    approximate_ok &= e.value.abs() < tol
                }
                _ => corrected_exact &= e.value.abs() < tol,
            }
        }
        let bounds = bounds_check(&f, &table);
        let v = Verdicts {
            corrected_exact,
            approximate_ok,
            margins_ok: r.margins.iter().all(|m| m.value >= floor),
            bounds_ok: bounds.iter().all(|b| b.pass),
        };
        verify_report("float", &floor, &tol, &r, &bounds, v)
    } else {
        let c = check_conclusions(&cfg, &floor, &tol, &opts, &table);
        let v = Verdicts {
            corrected_exact: c.corrected_exact,
            approximate_ok: c.approximate_ok,
            margins_ok: c.margins_ok,
            bounds_ok: c.bounds_ok,
        };
        verify_report("exact", &floor, &tol, &c.report, &c.bounds, v)
    };
    print!("{}", report.text());
    if let Some(p) = &a.output {
        emit(Some(p), &json(&report))?;
    }
    Ok(report.pass)
}

fn summary(o: &SolveOutcome, elapsed: Duration) -> String {
    format!(
        "converged: {}\nfeasibility score: {:e}\nmax |residual|: {:e}\nmin margin: {}\nrestarts used: {}\niterations: {}\nelapsed: {:.2?}\n",
        o.converged,
        o.feasibility_score,
        o.max_abs_residual,
        o.min_margin,
        o.restarts_used,
        o.iterations,
        elapsed
    )
}

fn solve(a: &SolveArgs) -> Result<bool> {
    let src = a.source.load()?;
    let opts = a.search.options(&src)?;
    let t = Instant::now();
    let out = solver::solve(&src.to_f64().datum, &opts)?;
    print!("{}", summary(&out, t.elapsed()));
    if let Some(p) = &a.output {
        emit(Some(p), &write_config(&out.config.to_rational()?))?;
    }
    Ok(out.converged)
}

fn sweep(a: &SweepArgs) -> Result<bool> {
    let src = a.source.load()?;
    let opts = a.search.options(&src)?;
    let t = Instant::now();
    let rep = solver::sweep(&src.to_f64().datum, a.halfwidth, a.count, &opts)?;
    emit(a.output.as_deref(), &rep.to_csv())?;
    eprintln!(
        "success: {}/{} (halfwidth {}, seed {}, {:.1?})",
        rep.success_count,
        rep.count,
        rep.halfwidth,
        rep.seed,
        t.elapsed()
    );
    Ok(true)
}

fn correct(a: &CorrectArgs) -> Result<bool> {
    let cfg = a.source.load()?;
    let out = correct_exact(&cfg)?;
    emit(a.output.as_deref(), &write_config(&out))?;
    Ok(true)
}

fn certificate_text(c: &IFTCertificate) -> String {
    let failed: Vec<String> = c
        .margin_survival
        .iter()
        .filter(|s| !s.pass)
        .map(|s| s.label.to_string())
        .collect();
    format!(
        "r: {}\nA: {}\nD1: {}\nD2: {}\nD2 r^2: {}\nresidual norm <= {}\nroot distance <= {}\nmargin survival: {}/{}{}\nverdict: {}\n",
        line(&c.r.both()),
        line(&c.a.both()),
        line(&c.d1.both()),
        line(&c.d2.both()),
        line(&c.image_radius.both()),
        line(&c.residual_norm.both()),
        line(&c.root_distance.both()),
        c.margin_survival.len() - failed.len(),
        c.margin_survival.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (failing: {})", failed.join(", "))
        },
        c.verdict
    )
}

fn certify(a: &CertifyArgs) -> Result<bool> {
    let cfg = a.source.load()?;
    let c = certify_existence(&cfg, &eval_options(false, &a.knot))?;
    print!("{}", certificate_text(&c));
    if let Some(p) = &a.output {
        emit(Some(p), &json(&c))?;
    }
    Ok(c.verdict)
}

#[derive(Serialize)]
struct PositivityReport {
    grid: usize,
    domain: [f64; 2],
    min_p: f64,
    min_dp: f64,
    min_slope: report::Both,
    pass: bool,
}

fn positivity(
    interp: &fansub_core::convexify::ConvexInterpolant,
    grid: usize,
) -> Result<(PositivityReport, String)> {
    let rows = interp.export_pressure_table(&interp.domain_grid(grid))?;
    let min_p = rows.iter().map(|r| r.p).fold(f64::INFINITY, f64::min);
    let min_dp = rows.iter().map(|r| r.dp).fold(f64::INFINITY, f64::min);
    let (lo, hi) = interp.domain_f64();
    Ok((
        PositivityReport {
            grid,
            domain: [lo, hi],
            min_p,
            min_dp,
            min_slope: interp.min_slope().both(),
            pass: min_p > 0.0 && min_dp > 0.0,
        },
        fansub_core::convexify::pressure_table_csv(&rows),
    ))
}

fn convexify(a: &ConvexifyArgs) -> Result<bool> {
    let cfg = a.source.load()?;
    let interp = build(&knots_from_config(&cfg), &BuildOptions::default())?;
    let (pos, table) = positivity(&interp, a.grid)?;
    println!(
        "domain: [{:.6}, {:.6}]\nknots: {}\nsmallest eps'' on the skeleton: {}\nmin p: {:e}\nmin p': {:e}\npositive: {}",
        pos.domain[0],
        pos.domain[1],
        interp.knots.len(),
        line(&pos.min_slope),
        pos.min_p,
        pos.min_dp,
        pos.pass
    );
    if let Some(p) = &a.output {
        emit(Some(p), &json(&interp))?;
    }
    if let Some(p) = &a.table {
        emit(Some(p), &table)?;
    }
    Ok(pos.pass)
}

#[derive(Serialize)]
struct Bundle {
    solve: SolveSummary,
    corrected: serde_json::Value,
    verification: report::VerifyReport,
    certificate: Option<IFTCertificate>,
    certificate_error: Option<String>,
    interpolant: Option<fansub_core::convexify::ConvexInterpolant>,
    positivity: Option<PositivityReport>,
    convexify_error: Option<String>,
    pass: bool,
}

#[derive(Serialize)]
struct SolveSummary {
    converged: bool,
    feasibility_score: f64,
    max_abs_residual: f64,
    min_margin: f64,
    restarts_used: usize,
    iterations: usize,
}

fn pipeline(a: &PipelineArgs) -> Result<bool> {
    let src = a.source.load()?;
    let opts = a.search.options(&src)?;
    let floor = rational_arg("margin-floor", &a.margin_floor)?;
    let t = Instant::now();
    let out = solver::solve(&src.to_f64().datum, &opts)?;
    eprint!("solve\n{}", summary(&out, t.elapsed()));
    let corrected = correct_exact(&out.config.to_rational()?)?;
    let eval = eval_options(false, &a.search.knot);
    let tol = Rational::from_f64(opts.equality_tolerance)?;
    let c = check_conclusions(&corrected, &floor, &tol, &eval, &BoundsTable::default());
    let verification = verify_report(
        "exact",
        &floor,
        &tol,
        &c.report,
        &c.bounds,
        Verdicts {
            corrected_exact: c.corrected_exact,
            approximate_ok: c.approximate_ok,
            margins_ok: c.margins_ok,
            bounds_ok: c.bounds_ok,
        },
    );
    eprint!("verify\n{}", verification.text());
    let (certificate, certificate_error) = match certify_existence(&corrected, &eval) {
        Ok(c) => {
            eprint!("certify\n{}", certificate_text(&c));
            (Some(c), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    let (interpolant, positivity, convexify_error) =
        match build(&knots_from_config(&corrected), &BuildOptions::default()) {
            Ok(i) => {
                let (p, _) = positivity(&i, a.grid)?;
                (Some(i), Some(p), None)
            }
            Err(e) => (None, None, Some(e.to_string())),
        };
    let pass = out.converged
        && verification.pass
        && certificate.as_ref().is_some_and(|c| c.verdict)
        && positivity.as_ref().is_some_and(|p| p.pass);
    let bundle = Bundle {
        solve: SolveSummary {
            converged: out.converged,
            feasibility_score: out.feasibility_score,
            max_abs_residual: out.max_abs_residual,
            min_margin: out.min_margin,
            restarts_used: out.restarts_used,
            iterations: out.iterations,
        },
        corrected: serde_json::from_str(&write_config(&corrected))?,
        verification,
        certificate,
        certificate_error,
        interpolant,
        positivity,
        convexify_error,
        pass,
    };
    emit(a.output.as_deref(), &json(&bundle))?;
    eprintln!("pipeline: {}", if pass { "pass" } else { "fail" });
    Ok(pass)
}

fn probe(a: &ProbeArgs) -> Result<bool> {
    let src = a.source.load()?;
    let opts = SolveOptions {
        max_restarts: a.restarts,
        rng_seed: a.seed,
        max_iterations: a.max_iterations,
        ..SolveOptions::default()
    };
    let datum: RiemannDatum<f64> = src.to_f64().datum;
    let rep = solver::two_wave_probe(&datum, &opts)?;
    println!(
        "starts: {}\nbest feasibility score: {:e}\nfeasible: {}",
        rep.scores.len(),
        rep.best_score,
        rep.best_score < 1e-2
    );
    if let Some(p) = &a.output {
        emit(Some(p), &json(&rep))?;
    }
    Ok(true)
}

fn export_fan(a: &ExportFanArgs) -> Result<bool> {
    let cfg = a.source.load()?;
    let t = rational_arg("t", &a.t)?;
    if t.is_negative() {
        return Err(Usage("--t must be non-negative".into()).into());
    }
    let mut s = String::from("interface,speed,x2\n");
    for (k, nu) in cfg.speeds.iter().enumerate() {
        let _ = std::fmt::Write::write_fmt(
            &mut s,
            format_args!("{k},{:?},{:?}\n", nu.to_f64(), (nu * &t).to_f64()),
        );
    }
    emit(a.output.as_deref(), &s)?;
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Solve(a) => solve(a),
        Command::Sweep(a) => sweep(a),
        Command::Correct(a) => correct(a),
        Command::Certify(a) => certify(a),
        Command::Convexify(a) => convexify(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Probe(a) => probe(a),
        Command::ExportFan(a) => export_fan(a),
    }
}

/// 1 for mathematical failures, 2 for bad input, 3 for anything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    for c in e.chain() {
        if c.is::<DocumentError>() || c.is::<Usage>() || c.is::<std::io::Error>() && !is_write(e) {
            return 2;
        }
        if c.is::<CorrectionError>() || c.is::<CertifyError>() || c.is::<ConvexError>() {
            return 1;
        }
        if let Some(s) = c.downcast_ref::<SolveError>() {
            return match s {
                SolveError::NotContact | SolveError::Options(_) | SolveError::GuessShape { .. } => {
                    2
                }
                SolveError::Model(_) => 2,
            };
        }
    }
    3
}

fn is_write(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.to_string().starts_with("writing "))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
