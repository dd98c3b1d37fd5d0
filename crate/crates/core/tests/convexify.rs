use fansub_core::convexify::{
    build, check_interpolation_data, grid, knots_from_config, BuildOptions, ConvexInterpolant,
    HermiteKnot,
};
use fansub_core::exactnum::Rational;
use fansub_core::witness::builtin_witness;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn witness_interpolant() -> ConvexInterpolant {
    build(
        &knots_from_config(&builtin_witness()),
        &BuildOptions::default(),
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn witness_knots_match_before_and_after_smoothing() {
    let c = witness_interpolant();
    for k in &c.knots {
        assert_eq!(
            c.eval_skeleton(&k.rho).unwrap(),
            (k.eps.clone(), k.deps.clone())
        );
        let e = c.eval_energy(k.rho.to_f64()).unwrap();
        assert!(rel(e.eps, k.eps.to_f64()) < 1e-12);
        assert!(rel(e.deps, k.deps.to_f64()) < 1e-12);
        assert!(e.d2eps > 0.0);
    }
    // Approaching each knot from the left reproduces its value as well.
    for k in &c.knots[1..] {
        let x = k.rho.to_f64();
        let e = c.eval_energy(x * (1.0 - 1e-15)).unwrap();
        assert!(
            rel(e.eps, k.eps.to_f64()) < 1e-10,
            "{} vs {}",
            e.eps,
            k.eps.to_f64()
        );
    }
}

#[test]
fn witness_region_two_and_three() {
    let w = builtin_witness();
    let c = witness_interpolant();
    let e = c.eval_energy(w.states[1].rho.to_f64()).unwrap();
    assert!(rel(e.eps, w.thermo.eps[1].to_f64()) < 1e-12);
    assert!(rel(e.deps, w.thermo.deps[1].to_f64()) < 1e-12);
    assert!(e.d2eps > 0.0);
    let r3 = w.states[2].rho.to_f64();
    let (p, dp) = c.pressure(r3).unwrap();
    assert!(rel(p, r3 * r3 * w.thermo.deps[2].to_f64()) < 1e-12);
    assert!(dp > 0.0);
}

#[test]
fn witness_pressure_is_increasing_on_ten_thousand_points() {
    let c = witness_interpolant();
    let mut min_p = f64::INFINITY;
    let mut min_dp = f64::INFINITY;
    let mut prev = f64::NEG_INFINITY;
    for x in c.domain_grid(10_000) {
        let (p, dp) = c.pressure(x).unwrap();
        min_p = min_p.min(p);
        min_dp = min_dp.min(dp);
        let e = c.eval_energy(x).unwrap();
        assert!(e.deps > prev);
        prev = e.deps;
    }
    assert!(min_p > 0.0 && min_dp > 0.0);
    let rows = c.export_pressure_table(&c.domain_grid(100)).unwrap();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.dp > 0.0));
    assert!(rows.windows(2).all(|w| w[0].p < w[1].p));
}

#[test]
fn witness_convexity_on_random_triples() {
    let c = witness_interpolant();
    let (lo, hi) = c.domain_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let mut t = [
            rng.gen_range(lo..hi),
            rng.gen_range(lo..hi),
            rng.gen_range(lo..hi),
        ];
        t.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let [a, b, d] = t;
        if d - a < 1e-6 {
            continue;
        }
        let ea = c.eval_energy(a).unwrap().eps;
        let eb = c.eval_energy(b).unwrap().eps;
        let ed = c.eval_energy(d).unwrap().eps;
        let chord = ((d - b) * ea + (b - a) * ed) / (d - a);
        assert!(eb <= chord + 1e-9 * chord.abs().max(1.0), "{a} {b} {d}");
    }
    // Midpoints of the gaps lie strictly below the chord of the neighbouring knots.
    for w in c.knots.windows(2) {
        let (x0, x1) = (w[0].rho.to_f64(), w[1].rho.to_f64());
        let mid = c.eval_energy(0.5 * (x0 + x1)).unwrap().eps;
        assert!(mid < 0.5 * (w[0].eps.to_f64() + w[1].eps.to_f64()));
    }
}

#[test]
fn derivatives_agree_with_finite_differences() {
    let c = witness_interpolant();
    let h = c.smoothing_radius.to_f64();
    // Sample densely around every corner, where the rounding is active.
    for b in &c.breakpoints {
        let b = b.to_f64();
        for i in -20..=20 {
            let x = b + h * i as f64 / 16.0;
            let step = h * 1e-4;
            let e = c.eval_energy(x).unwrap();
            let ep = c.eval_energy(x + step).unwrap();
            let em = c.eval_energy(x - step).unwrap();
            let d1 = (ep.eps - em.eps) / (2.0 * step);
            let d2 = (ep.deps - em.deps) / (2.0 * step);
            assert!(rel(d1, e.deps) < 1e-6, "eps' at {x}: {d1} vs {}", e.deps);
            assert!(
                (d2 - e.d2eps).abs() < 1e-4 * e.d2eps.abs().max(1.0),
                "eps'' at {x}: {d2} vs {}",
                e.d2eps
            );
            assert!(e.d2eps >= e.d2eps_lower * (1.0 - 1e-9));
        }
    }
}

#[test]
fn pressure_table_edge_cases() {
    let c = witness_interpolant();
    assert!(c.export_pressure_table(&[]).unwrap().is_empty());
    let (lo, hi) = c.domain_f64();
    assert!(c.export_pressure_table(&[hi + 1.0]).is_err());
    assert_eq!(grid(lo, hi, 3).len(), 3);
}

fn cubic_knots(xs: &[f64], alpha: f64, beta: f64, shift: f64) -> Vec<HermiteKnot> {
    xs.iter()
        .map(|&x| {
            let x = Rational::from_f64(x).unwrap();
            let a = Rational::from_f64(alpha).unwrap();
            let b = Rational::from_f64(beta).unwrap();
            let s = Rational::from_f64(shift).unwrap();
            HermiteKnot {
                eps: &a * &x * &x + &b * &x * &x * &x + &s * &x,
                deps: Rational::from_integer(2) * &a * &x
                    + Rational::from_integer(3) * &b * &x * &x
                    + &s,
                rho: x,
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn convex_data_gives_monotone_interpolant(
        mut xs in prop::collection::vec(0.1f64..20.0, 1..6),
        alpha in 0.01f64..10.0,
        beta in 0.0f64..2.0,
        shift in 0.0f64..5.0,
    ) {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let data = cubic_knots(&xs, alpha, beta, shift);
        if data.len() > 1 {
            prop_assert!(check_interpolation_data(&data).unwrap().unwrap().is_positive());
        }
        let c = build(&data, &BuildOptions::default()).unwrap();
        for k in &c.knots {
            prop_assert_eq!(c.eval_skeleton(&k.rho).unwrap(), (k.eps.clone(), k.deps.clone()));
        }
        let mut prev = f64::NEG_INFINITY;
        for x in c.domain_grid(400) {
            let e = c.eval_energy(x).unwrap();
            prop_assert!(e.deps > prev);
            prop_assert!(e.deps > 0.0);
            prop_assert!(e.d2eps > 0.0);
            prev = e.deps;
        }
    }
}
