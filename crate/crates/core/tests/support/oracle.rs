//! Second, deliberately naive transcription of the jump conditions and
//! inequalities, written out case by case with explicit outer velocities
//! instead of ghost states, compared rationally against the library.

use std::collections::BTreeMap;

use fansub_core::exactnum::Rational;
use fansub_core::fan_model::{FanConfiguration, RiemannDatum, ThermoTable, WaveState};
use fansub_core::system::{equality_residuals, inequality_margins, EvalOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(p: i64, q: i64) -> Rational {
    Rational::new(p, q).unwrap()
}

fn two() -> Rational {
    r(2, 1)
}

pub struct Literal {
    pub residuals: BTreeMap<String, Rational>,
    pub margins: BTreeMap<String, Rational>,
}

pub fn literal(cfg: &FanConfiguration<Rational>, include_right_knot: bool) -> Literal {
    let n = cfg.states.len();
    let d = &cfg.datum;
    let t = &cfg.thermo;
    let (rm, rp) = (&d.rho_minus, &d.rho_plus);
    let (vm1, vm2) = (&d.v_minus[0], &d.v_minus[1]);
    let (vp1, vp2) = (&d.v_plus[0], &d.v_plus[1]);
    let rho = |i: usize| &cfg.states[i - 1].rho;
    let al = |i: usize| &cfg.states[i - 1].alpha;
    let be = |i: usize| &cfg.states[i - 1].beta;
    let ga = |i: usize| &cfg.states[i - 1].gamma;
    let de = |i: usize| &cfg.states[i - 1].delta;
    let cc = |i: usize| &cfg.states[i - 1].c;
    let ep = |i: usize| &t.eps[i - 1];
    let p = |i: usize| rho(i) * rho(i) * &t.deps[i - 1];
    let pm = rm * rm * &t.deps_minus;
    let pp = rp * rp * &t.deps_plus;
    let num = &cfg.speeds[0];
    let nup = &cfg.speeds[n];
    let nu = |i: usize| &cfg.speeds[i];

    let mut res = BTreeMap::new();
    // left interface
    res.insert(
        "mass[left]".to_string(),
        num * (rm - rho(1)) - (rm * vm2 - rho(1) * be(1)),
    );
    res.insert(
        "momentum1[left]".to_string(),
        num * (rm * vm1 - rho(1) * al(1)) - (rm * vm1 * vm2 - rho(1) * de(1)),
    );
    res.insert(
        "momentum2[left]".to_string(),
        num * (rm * vm2 - rho(1) * be(1))
            - (rm * vm2 * vm2 + rho(1) * ga(1) + &pm - p(1) - rho(1) * cc(1) / two()),
    );
    for i in 1..n {
        let j = i + 1;
        let tag = format!("[{i}|{j}]");
        res.insert(
            format!("mass{tag}"),
            nu(i) * (rho(i) - rho(j)) - (rho(i) * be(i) - rho(j) * be(j)),
        );
        res.insert(
            format!("momentum1{tag}"),
            nu(i) * (rho(i) * al(i) - rho(j) * al(j)) - (rho(i) * de(i) - rho(j) * de(j)),
        );
        res.insert(
            format!("momentum2{tag}"),
            nu(i) * (rho(i) * be(i) - rho(j) * be(j))
                - (-(rho(i) * ga(i)) + rho(j) * ga(j) + p(i) - p(j) + rho(i) * cc(i) / two()
                    - rho(j) * cc(j) / two()),
        );
    }
    res.insert(
        "mass[right]".to_string(),
        nup * (rho(n) - rp) - (rho(n) * be(n) - rp * vp2),
    );
    res.insert(
        "momentum1[right]".to_string(),
        nup * (rho(n) * al(n) - rp * vp1) - (rho(n) * de(n) - rp * vp1 * vp2),
    );
    res.insert(
        "momentum2[right]".to_string(),
        nup * (rho(n) * be(n) - rp * vp2)
            - (-(rho(n) * ga(n)) - rp * vp2 * vp2 + p(n) - &pp + rho(n) * cc(n) / two()),
    );

    let mut m = BTreeMap::new();
    for i in 1..=n {
        m.insert(format!("trace[{i}]"), cc(i) - al(i) * al(i) - be(i) * be(i));
        let a = cc(i) / two() - al(i) * al(i) + ga(i);
        let b = cc(i) / two() - be(i) * be(i) - ga(i);
        let c = de(i) - al(i) * be(i);
        m.insert(format!("determinant[{i}]"), a * b - &c * &c);
    }
    let vm_sq = vm1 * vm1 + vm2 * vm2;
    let vp_sq = vp1 * vp1 + vp2 * vp2;
    {
        let lhs = num * (rm * &t.eps_minus - rho(1) * ep(1))
            + num * (rm * &vm_sq / two() - rho(1) * cc(1) / two());
        let rhs = ((rm * &t.eps_minus + &pm) * vm2 - (rho(1) * ep(1) + p(1)) * be(1))
            + (rm * vm2 * &vm_sq / two() - rho(1) * be(1) * cc(1) / two());
        m.insert("entropy[left]".to_string(), rhs - lhs);
    }
    for i in 1..n {
        let j = i + 1;
        let lhs = nu(i) * (rho(i) * ep(i) - rho(j) * ep(j))
            + nu(i) * (rho(i) * cc(i) / two() - rho(j) * cc(j) / two());
        let rhs = ((rho(i) * ep(i) + p(i)) * be(i) - (rho(j) * ep(j) + p(j)) * be(j))
            + (rho(i) * be(i) * cc(i) / two() - rho(j) * be(j) * cc(j) / two());
        m.insert(format!("entropy[{i}|{j}]"), rhs - lhs);
    }
    {
        let lhs = nup * (rho(n) * ep(n) - rp * &t.eps_plus)
            + nup * (rho(n) * cc(n) / two() - rp * &vp_sq / two());
        let rhs = ((rho(n) * ep(n) + p(n)) * be(n) - (rp * &t.eps_plus + &pp) * vp2)
            + (rho(n) * be(n) * cc(n) / two() - rp * vp2 * &vp_sq / two());
        m.insert("entropy[right]".to_string(), rhs - lhs);
    }
    for k in 1..=n {
        m.insert(
            format!("ordering[{}<{k}]", k - 1),
            &cfg.speeds[k] - &cfg.speeds[k - 1],
        );
    }
    let mut knots: Vec<(String, Rational, Rational, Rational)> = vec![(
        "-".into(),
        rm.clone(),
        t.eps_minus.clone(),
        t.deps_minus.clone(),
    )];
    for i in 1..=n {
        knots.push((
            i.to_string(),
            rho(i).clone(),
            ep(i).clone(),
            t.deps[i - 1].clone(),
        ));
    }
    if include_right_knot && rp != rm {
        knots.push((
            "+".into(),
            rp.clone(),
            t.eps_plus.clone(),
            t.deps_plus.clone(),
        ));
    }
    for (a, ra, ea, da) in &knots {
        for (b, rb, eb, _) in &knots {
            if a != b {
                m.insert(format!("convexity[{a},{b}]"), eb - ea - da * (rb - ra));
            }
        }
    }
    m.insert("density[-]".into(), rm.clone());
    m.insert("density[+]".into(), rp.clone());
    m.insert("deps[-]".into(), t.deps_minus.clone());
    m.insert("deps[+]".into(), t.deps_plus.clone());
    for i in 1..=n {
        m.insert(format!("density[{i}]"), rho(i).clone());
        m.insert(format!("deps[{i}]"), t.deps[i - 1].clone());
    }
    Literal {
        residuals: res,
        margins: m,
    }
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    let den = [1, 2, 3, 7, 64, 1000][rng.gen_range(0..6)];
    r(rng.gen_range(-5000..5000), den)
}

fn random_positive(rng: &mut ChaCha8Rng) -> Rational {
    r(rng.gen_range(1..2000), [1, 4, 9, 128][rng.gen_range(0..4)])
}

pub fn random_config(rng: &mut ChaCha8Rng, n: usize) -> FanConfiguration<Rational> {
    let contact = rng.gen_bool(0.3);
    let rho_minus = random_positive(rng);
    let rho_plus = if contact {
        rho_minus.clone()
    } else {
        random_positive(rng)
    };
    let mut speeds: Vec<Rational> = (0..=n).map(|_| random_rational(rng)).collect();
    speeds.sort();
    let mut rnd = || random_rational(rng);
    let datum = RiemannDatum {
        rho_minus,
        rho_plus,
        v_minus: [rnd(), rnd()],
        v_plus: [rnd(), rnd()],
    };
    let thermo = ThermoTable {
        eps_minus: rnd(),
        eps_plus: rnd(),
        deps_minus: rnd(),
        deps_plus: rnd(),
        eps: (0..n).map(|_| rnd()).collect(),
        deps: (0..n).map(|_| rnd()).collect(),
    };
    let states = (0..n)
        .map(|_| WaveState {
            rho: rnd(),
            alpha: rnd(),
            beta: rnd(),
            gamma: rnd(),
            delta: rnd(),
            c: rnd(),
        })
        .collect();
    FanConfiguration {
        datum,
        speeds,
        states,
        thermo,
    }
}

/// Compares `count` seeded random configurations against the library,
/// cycling through one to four regions.
pub fn compare_random_configurations(seed: u64, count: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..count {
        let n = 1 + case % 4;
        let cfg = random_config(&mut rng, n);
        let include_right_knot = rng.gen_bool(0.5);
        let lit = literal(&cfg, include_right_knot);

        let res = equality_residuals(&cfg);
        if res.len() != 3 * (n + 1) {
            return Err(format!("case {case}: {} residuals", res.len()));
        }
        let got: BTreeMap<String, Rational> = res
            .into_iter()
            .map(|e| (e.label.to_string(), e.value))
            .collect();
        if got != lit.residuals {
            return Err(format!("residuals differ in case {case}"));
        }

        let opts = EvalOptions {
            contact: false,
            include_right_knot,
        };
        let margins = inequality_margins(&cfg, &opts);
        let count = margins.len();
        let got: BTreeMap<String, Rational> = margins
            .into_iter()
            .map(|e| (e.label.to_string(), e.value))
            .collect();
        if got.len() != count {
            return Err(format!("duplicate margin labels in case {case}"));
        }
        if got != lit.margins {
            return Err(format!("margins differ in case {case}"));
        }
    }
    Ok(())
}
