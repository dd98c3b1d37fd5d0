use fansub_core::exactnum::Rational;
use fansub_core::fan_model::{ghost_state, reynolds_stress};
use fansub_core::system::{
    check_conclusions, equality_residuals, evaluate, BoundsTable, EqLabel, EvalOptions, Interface,
};
use fansub_core::witness::builtin_witness;

fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

#[test]
fn six_jump_relations_vanish_exactly_and_six_are_tiny() {
    let w = builtin_witness();
    let res = equality_residuals(&w);
    assert_eq!(res.len(), 12);
    let tol = q("1e-11");
    let mut exact = 0;
    for e in &res {
        match e.label {
            EqLabel::Jump(Interface::Left, _) | EqLabel::Jump(Interface::Inner(1), _) => {
                assert!(e.value.is_zero(), "{} = {}", e.label, e.value);
                exact += 1;
            }
            _ => {
                assert!(e.value.abs() < tol, "{} = {}", e.label, e.value.to_f64());
                assert!(!e.value.is_zero(), "{} is unexpectedly exact", e.label);
            }
        }
    }
    assert_eq!(exact, 6);
}

#[test]
fn every_margin_is_at_least_one_third() {
    let w = builtin_witness();
    let opts = EvalOptions {
        contact: true,
        include_right_knot: true,
    };
    let third = q("1/3");
    let rep = evaluate(&w, &third, &opts);
    for m in &rep.margins {
        assert!(m.value >= third, "{} = {}", m.label, m.value.to_f64());
    }
    assert!(rep.min_margin >= third);
    // Not exactly feasible: six residuals are merely small.
    assert!(!rep.exact_feasible);
    assert!(rep.max_abs_residual < q("1e-11"));
    // Contact identities hold exactly.
    assert!(rep
        .equalities
        .iter()
        .filter(|e| matches!(e.label, EqLabel::Contact(_)))
        .all(|e| e.value.is_zero()));
}

#[test]
fn conclusions_and_bounds_table() {
    let w = builtin_witness();
    let c = check_conclusions(
        &w,
        &q("1/3"),
        &q("1e-11"),
        &EvalOptions {
            contact: true,
            include_right_knot: true,
        },
        &BoundsTable::default(),
    );
    assert!(c.corrected_exact && c.approximate_ok && c.margins_ok && c.bounds_ok);
    assert!(c.pass);
    assert_eq!(c.bounds.len(), 10);
}

#[test]
fn region_one_stress_is_positive_definite_with_trace_above_a_third() {
    let w = builtin_witness();
    for s in &w.states {
        let r = reynolds_stress(s);
        assert!(r.is_positive_definite());
    }
    let s = &w.states[0];
    let r = reynolds_stress(s);
    assert_eq!(r.trace(), &s.c - &(&s.alpha * &s.alpha) - &s.beta * &s.beta);
    assert!(r.trace() > q("1/3"));
}

#[test]
fn left_ghost_matches_left_jump_relations() {
    let w = builtin_witness();
    let g = ghost_state(&w.datum.v_minus, &w.datum.rho_minus).unwrap();
    assert!(reynolds_stress(&g).trace().is_zero());
    // Residuals across the left interface are built from this ghost and vanish.
    let res = equality_residuals(&w);
    assert!(res[..3].iter().all(|e| e.value.is_zero()));
}
