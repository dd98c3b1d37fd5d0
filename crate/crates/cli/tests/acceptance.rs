//! Acceptance run: one line per criterion, non-zero exit if any fails.
//! Set `FANSUB_ACCEPTANCE_ONLY=3,7` to run a subset.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use fansub_core::certify::{
    gamma, gamma_jacobian, jacobian_rows, sigma_min_at_least, split, GammaParams, GammaPoint, DIM,
};
use fansub_core::convexify::{build, knots_from_config, BuildOptions};
use fansub_core::correction::correct_exact;
use fansub_core::exactnum::Rational;
use fansub_core::solver::{sweep, two_wave_probe, SolveOptions};
use fansub_core::witness::builtin_witness;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = fn() -> Result<String, String>;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

fn field(v: &Value, key: &str) -> Rational {
    q(v[key].as_str().unwrap_or_else(|| panic!("{key} missing")))
}

fn ensure(ok: bool, what: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn fansub(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fansub"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn scratch(name: &str) -> String {
    let dir = std::env::temp_dir().join(format!("fansub-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

fn within(t: Instant, limit: u64) -> Result<(), String> {
    ensure(
        t.elapsed() < Duration::from_secs(limit),
        format!("took {:.1?}, limit {limit} s", t.elapsed()),
    )
}

fn witness_verification() -> Result<String, String> {
    let t = Instant::now();
    let path = scratch("verify.json");
    let (code, _) = fansub(&["verify", "--builtin", "appendix-b", "--exact", "-o", &path]);
    ensure(code == 0, format!("exit {code}"))?;
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let mut exact_zero = 0;
    for row in r["residuals_by_interface"].as_array().unwrap() {
        let v = field(&row["value"], "exact");
        match row["label"].as_str().unwrap() {
            "left" | "1|2" => {
                ensure(v.is_zero(), format!("{} residual {v}", row["label"]))?;
                exact_zero += 1;
            }
            other => ensure(v < q("1e-11"), format!("{other} residual {}", v.to_f64()))?,
        }
    }
    ensure(exact_zero == 2, "left and 1|2 blocks missing")?;
    let third = q("1/3");
    for m in r["margins"].as_array().unwrap() {
        let v = field(&m["value"], "exact");
        ensure(v >= third, format!("{} = {}", m["label"], v.to_f64()))?;
    }
    for b in r["bounds"].as_array().unwrap() {
        ensure(b["pass"] == true, format!("bound {}", b["name"]))?;
    }
    ensure(r["pass"] == true, "verdict fail")?;
    within(t, 30)?;
    Ok(format!(
        "{} margins >= 1/3, min {:.4}",
        r["margins"].as_array().unwrap().len(),
        field(&r["min_margin"], "exact").to_f64()
    ))
}

fn singular_value_certificate() -> Result<String, String> {
    let t = Instant::now();
    let (x, p) = split(&builtin_witness()).map_err(|e| e.to_string())?;
    let j = jacobian_rows(&gamma_jacobian(&x, &p));
    ensure(
        sigma_min_at_least(&j, &q("2")),
        "sigma_min >= 2 not certified",
    )?;
    within(t, 10)?;
    Ok("sigma_min >= 2 certified exactly".into())
}

fn ift_certificate() -> Result<String, String> {
    let t = Instant::now();
    let path = scratch("cert.json");
    let (code, _) = fansub(&["certify", "--builtin", "appendix-b", "-o", &path]);
    ensure(code == 0, format!("exit {code}"))?;
    let c: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let (r, a) = (field(&c, "r"), field(&c, "A"));
    let image = field(&c, "image_radius");
    let norm = field(&c, "residual_norm");
    ensure(r == q("2"), format!("r = {r}"))?;
    ensure(a <= q("60"), format!("A = {}", a.to_f64()))?;
    ensure(
        image == (&q("72") * &a).recip().unwrap(),
        "D2 r^2 != 1/(72 A)",
    )?;
    ensure(image >= q("1/4320"), "D2 r^2 < 1/4320")?;
    ensure(norm <= image, "residual outside the image ball")?;
    ensure(&norm * &norm < q("6e-22"), "residual norm >= 1e-11 sqrt 6")?;
    ensure(
        field(&c, "root_distance") <= q("1e-11"),
        "root distance > 1e-11",
    )?;
    let survival = c["margin_survival"].as_array().unwrap();
    ensure(
        survival.iter().all(|s| s["pass"] == true),
        "a margin does not survive",
    )?;
    ensure(c["verdict"] == true, "verdict false")?;
    within(t, 30)?;
    Ok(format!(
        "A = {:.3}, D2 r^2 = {:.3e}, residual <= {:.2e}, {} margins survive",
        a.to_f64(),
        image.to_f64(),
        norm.to_f64(),
        survival.len()
    ))
}

fn correction_idempotence() -> Result<String, String> {
    let t = Instant::now();
    let w = builtin_witness();
    let c = correct_exact(&w).map_err(|e| e.to_string())?;
    ensure(c == w, "correction moved the witness")?;
    within(t, 5)?;
    Ok("correct(witness) == witness".into())
}

fn jacobian_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let mut g = || rng.gen_range(-20.0..20.0);
        let p = GammaParams {
            rho_nm1: g(),
            alpha_nm1: g(),
            beta_nm1: g(),
            gamma_nm1: g(),
            delta_nm1: g(),
            deps_nm1: g(),
            c_nm1: g(),
            gamma_n: g(),
            deps_n: g(),
            c_n: g(),
            rho_plus: g(),
            v_plus1: g(),
            v_plus2: g(),
            deps_plus: g(),
        };
        let x: [f64; DIM] = std::array::from_fn(|_| rng.gen_range(-20.0..20.0));
        let j = gamma_jacobian(&GammaPoint::from_array(x), &p);
        for col in 0..DIM {
            let (mut xp, mut xm) = (x, x);
            xp[col] += h;
            xm[col] -= h;
            let gp = gamma(&GammaPoint::from_array(xp), &p);
            let gm = gamma(&GammaPoint::from_array(xm), &p);
            for row in 0..DIM {
                let fd = (gp[row] - gm[row]) / (2.0 * h);
                let err = (fd - j[row][col]).abs() / j[row][col].abs().max(1.0);
                worst = worst.max(err);
            }
        }
        let pr = p.map(|v| Rational::from_f64(*v).unwrap());
        let xr = GammaPoint::from_array(x.map(|v| Rational::from_f64(v).unwrap()));
        let jr = gamma_jacobian(&xr, &pr);
        let zeros = [
            (0, 0),
            (0, 2),
            (0, 4),
            (1, 1),
            (1, 4),
            (2, 0),
            (2, 2),
            (2, 4),
            (3, 0),
            (3, 2),
            (3, 5),
            (4, 1),
            (4, 5),
            (5, 0),
            (5, 2),
            (5, 5),
        ];
        for (r, c) in zeros {
            ensure(
                jr[r][c].is_zero(),
                format!("entry ({},{}) not zero", r + 1, c + 1),
            )?;
        }
    }
    ensure(worst <= 1e-5, format!("relative error {worst:.2e}"))?;
    Ok(format!(
        "100 points, worst relative error {worst:.1e}, 16 structural zeros"
    ))
}

fn convex_pressure_law() -> Result<String, String> {
    let t = Instant::now();
    let w = builtin_witness();
    let interp =
        build(&knots_from_config(&w), &BuildOptions::default()).map_err(|e| e.to_string())?;
    for k in &interp.knots {
        let got = interp.eval_skeleton(&k.rho).map_err(|e| e.to_string())?;
        ensure(
            got == (k.eps.clone(), k.deps.clone()),
            format!("knot {} not matched", k.rho.to_f64()),
        )?;
    }
    let rows = interp
        .export_pressure_table(&interp.domain_grid(10_000))
        .map_err(|e| e.to_string())?;
    let min_dp = rows.iter().map(|r| r.dp).fold(f64::INFINITY, f64::min);
    ensure(rows.len() == 10_000, "grid size")?;
    ensure(min_dp > 0.0, format!("min p' = {min_dp}"))?;
    within(t, 10)?;
    Ok(format!(
        "{} knots exact, min p' = {min_dp:.3} on 10^4 points",
        interp.knots.len()
    ))
}

fn sweep_with(count: usize, need: usize, limit: u64) -> Result<String, String> {
    let t = Instant::now();
    let w = builtin_witness().to_f64();
    let opts = SolveOptions {
        initial_guess: Some(w.clone()),
        ..SolveOptions::default()
    };
    let rep = sweep(&w.datum, 0.5, count, &opts).map_err(|e| e.to_string())?;
    ensure(
        rep.success_count >= need,
        format!("{}/{count} succeeded, need {need}", rep.success_count),
    )?;
    within(t, limit)?;
    Ok(format!(
        "{}/{count} in {:.1?}",
        rep.success_count,
        t.elapsed()
    ))
}

fn sweep_experiment() -> Result<String, String> {
    let smoke = sweep_with(20, 19, 300)?;
    let full = sweep_with(100, 95, 1800)?;
    Ok(format!("smoke {smoke}; full {full}"))
}

fn two_wave_probe_fails() -> Result<String, String> {
    let datum = builtin_witness().to_f64().datum;
    let opts = SolveOptions {
        max_restarts: 50,
        ..SolveOptions::default()
    };
    let rep = two_wave_probe(&datum, &opts).map_err(|e| e.to_string())?;
    ensure(
        rep.scores.len() == 50,
        format!("{} starts", rep.scores.len()),
    )?;
    ensure(
        rep.best_score > 1e-2,
        format!("best score {:.3e}", rep.best_score),
    )?;
    Ok(format!("best score {:.3} over 50 starts", rep.best_score))
}

fn oracle_equivalence() -> Result<String, String> {
    oracle::compare_random_configurations(2025, 1000)?;
    Ok("1000 configurations, N in 1..=4".into())
}

fn main() {
    let checks: [(&str, Check); 9] = [
        ("witness verification", witness_verification),
        ("singular value certificate", singular_value_certificate),
        ("IFT certificate", ift_certificate),
        ("correction idempotence", correction_idempotence),
        ("Jacobian suite", jacobian_suite),
        ("convex pressure law", convex_pressure_law),
        ("sweep", sweep_experiment),
        ("two-wave probe", two_wave_probe_fails),
        ("oracle equivalence", oracle_equivalence),
    ];
    let only: Option<Vec<usize>> = std::env::var("FANSUB_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let n = k + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!(
                "criterion {n} ({name}): PASS [{:.1?}] {detail}",
                t.elapsed()
            ),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL [{:.1?}] {why}", t.elapsed());
            }
        }
    }
    let _ = std::fs::remove_dir_all(
        std::env::temp_dir().join(format!("fansub-acceptance-{}", std::process::id())),
    );
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
