use std::collections::BTreeMap;
use std::fmt::Write;

use fansub_core::exactnum::{Rational, Real};
use fansub_core::system::{BoundCheck, Entry, EqLabel, Interface, MarginLabel, ResidualReport};
use serde::Serialize;

/// A number in both renderings.
#[derive(Clone, Debug, Serialize)]
pub struct Both {
    pub exact: Option<String>,
    pub float: f64,
}

pub trait Render {
    fn both(&self) -> Both;
}

impl Render for Rational {
    fn both(&self) -> Both {
        Both {
            exact: Some(self.to_string()),
            float: self.to_f64(),
        }
    }
}

impl Render for f64 {
    fn both(&self) -> Both {
        Both {
            exact: None,
            float: *self,
        }
    }
}

pub fn family(l: &MarginLabel) -> &'static str {
    match l {
        MarginLabel::Trace(_) => "trace",
        MarginLabel::Determinant(_) => "determinant",
        MarginLabel::Entropy(_) => "entropy",
        MarginLabel::Ordering(_) => "ordering",
        MarginLabel::Convexity(..) => "convexity",
        MarginLabel::Density(_) => "density",
        MarginLabel::EnergyDerivative(_) => "deps",
    }
}

/// Interfaces left to right, then the contact identities.
fn block(l: &EqLabel) -> (Option<Interface>, String) {
    match l {
        EqLabel::Jump(i, _) => (Some(*i), i.to_string()),
        EqLabel::Contact(_) => (None, "contact".into()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Labelled {
    pub label: String,
    pub value: Both,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub name: &'static str,
    pub limit: i64,
    pub observed: Both,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub mode: &'static str,
    pub margin_floor: Both,
    pub tolerance: Both,
    pub residuals_by_interface: Vec<Labelled>,
    pub margins_by_family: Vec<Labelled>,
    pub equalities: Vec<Labelled>,
    pub margins: Vec<Labelled>,
    pub bounds: Vec<BoundRow>,
    pub max_abs_residual: Both,
    pub min_margin: Both,
    pub corrected_exact: bool,
    pub approximate_ok: bool,
    pub margins_ok: bool,
    pub bounds_ok: bool,
    pub pass: bool,
}

fn labelled<L: ToString, S: Render>(e: &[Entry<L, S>]) -> Vec<Labelled> {
    e.iter()
        .map(|e| Labelled {
            label: e.label.to_string(),
            value: e.value.both(),
        })
        .collect()
}

fn worst<S: Real + Render, K: Ord>(
    items: impl Iterator<Item = (K, S)>,
    pick: impl Fn(S, S) -> S,
    name: impl Fn(&K) -> String,
) -> Vec<Labelled> {
    let mut m: BTreeMap<K, S> = BTreeMap::new();
    for (k, v) in items {
        let next = match m.remove(&k) {
            Some(old) => pick(old, v),
            None => v,
        };
        m.insert(k, next);
    }
    m.into_iter()
        .map(|(k, v)| Labelled {
            label: name(&k),
            value: v.both(),
        })
        .collect()
}

pub struct Verdicts {
    pub corrected_exact: bool,
    pub approximate_ok: bool,
    pub margins_ok: bool,
    pub bounds_ok: bool,
}

pub fn verify_report<S: Real + Render>(
    mode: &'static str,
    floor: &S,
    tolerance: &S,
    r: &ResidualReport<S>,
    bounds: &[BoundCheck<S>],
    v: Verdicts,
) -> VerifyReport {
    let residuals_by_interface = worst(
        r.equalities.iter().map(|e| {
            let (i, name) = block(&e.label);
            ((i.is_none(), i, name), e.value.abs())
        }),
        S::max_of,
        |k| k.2.clone(),
    );
    VerifyReport {
        mode,
        margin_floor: floor.both(),
        tolerance: tolerance.both(),
        residuals_by_interface,
        margins_by_family: worst(
            r.margins
                .iter()
                .map(|e| (family(&e.label), e.value.clone())),
            S::min_of,
            |k| k.to_string(),
        ),
        equalities: labelled(&r.equalities),
        margins: labelled(&r.margins),
        bounds: bounds
            .iter()
            .map(|b| BoundRow {
                name: b.name,
                limit: b.limit,
                observed: b.observed.both(),
                pass: b.pass,
            })
            .collect(),
        max_abs_residual: r.max_abs_residual.both(),
        min_margin: r.min_margin.both(),
        pass: v.corrected_exact && v.approximate_ok && v.margins_ok && v.bounds_ok,
        corrected_exact: v.corrected_exact,
        approximate_ok: v.approximate_ok,
        margins_ok: v.margins_ok,
        bounds_ok: v.bounds_ok,
    }
}

pub fn line(b: &Both) -> String {
    match &b.exact {
        Some(e) if e.len() <= 48 => format!("{e} (~{:.6e})", b.float),
        Some(e) => format!("{:.6e} [{} digits exact]", b.float, e.len()),
        None => format!("{:.6e}", b.float),
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

impl VerifyReport {
    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode: {}", self.mode);
        let _ = writeln!(s, "max |residual| by interface:");
        for r in &self.residuals_by_interface {
            let _ = writeln!(s, "  {:<10} {}", r.label, line(&r.value));
        }
        let _ = writeln!(
            s,
            "min margin by family (floor {}):",
            line(&self.margin_floor)
        );
        for r in &self.margins_by_family {
            let _ = writeln!(s, "  {:<12} {}", r.label, line(&r.value));
        }
        let _ = writeln!(s, "bounds:");
        for b in &self.bounds {
            let _ = writeln!(
                s,
                "  {:<9} <= {:<5} {:<4} {}",
                b.name,
                b.limit,
                mark(b.pass),
                line(&b.observed)
            );
        }
        let _ = writeln!(
            s,
            "corrected relations exact: {}",
            mark(self.corrected_exact)
        );
        let _ = writeln!(
            s,
            "remaining relations below {}: {}",
            line(&self.tolerance),
            mark(self.approximate_ok)
        );
        let _ = writeln!(s, "margins at or above floor: {}", mark(self.margins_ok));
        let _ = writeln!(s, "bounds: {}", mark(self.bounds_ok));
        let _ = writeln!(s, "verdict: {}", if self.pass { "pass" } else { "fail" });
        s
    }
}
