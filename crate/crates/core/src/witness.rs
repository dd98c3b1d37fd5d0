//! The published three-region witness, stored as exact rationals.

use crate::exactnum::Rational;
use crate::fan_model::{FanConfiguration, RiemannDatum, ThermoTable, WaveState};

const ALPHA: [&str; 3] = [
    "-8177336068870495/140737488355328",
    "-4833381446756075/562949953421312",
    "3121572020159473/562949953421312",
];
const BETA: [&str; 3] = [
    "-2536561643647751/140737488355328",
    "-1114286601116939/70368744177664",
    "-6219197795695073/562949953421312",
];
const GAMMA: [&str; 3] = [
    "841617150350781/549755813888",
    "-2850833975067331/17592186044416",
    "-8954832877447991/140737488355328",
];
const DELTA: [&str; 3] = [
    "28872176135415855785280523654056524019908546591/27627619078169805047324756605549438692229120",
    "-867454945412067709200232997995952542374584537720982074207241594308599438377/32748846874784971211058574285222379723549486466626634273206947431338475520",
    "-2871256077954219/35184372088832",
];
const RHO_OUTER: &str = "2708112612978501/281474976710656";
const RHO: [&str; 3] = [
    "6811063536043807/562949953421312",
    "2057060350258899/562949953421312",
    "3062207031116133/281474976710656",
];
const EPS_OUTER: &str = "-5041529442624971/2199023255552";
const EPS: [&str; 3] = [
    "-5015532875605977/2199023255552",
    "-5073206593829053/2199023255552",
    "-2515400677054201/1099511627776",
];
const DEPS_OUTER: &str = "1676289422169645/562949953421312";
const DEPS: [&str; 3] = [
    "60006068216738166351756926651195471316209797920723479281182349/9106752347169134708406278810788569756749285046122185710632960",
    "1831278218949756891087541424381121781924211556364089293813566516592411003/1359848686641341079894728790850171965963388817622134940140753492461486080",
    "5400383921383283/1125899906842624",
];
const SPEEDS: [&str; 4] = [
    "-6486283176597739958874052307549/196306040423407104692364247040",
    "-1153852086001065889673487658885/60824224363690518566334889984",
    "-4856156003780791/562949953421312",
    "7162856387903725/562949953421312",
];
const V_MINUS_1: &str = "-4098844157247653/70368744177664";
const V_PLUS_1: &str = "3603433899522037/562949953421312";
const V_2: &str = "-996118042660627/70368744177664";
const C: [&str; 3] = [
    "510415269881361/137438953472",
    "1515879700153707/2199023255552",
    "1855257252703141/8796093022208",
];

fn q(s: &str) -> Rational {
    s.parse().expect("embedded constant parses")
}

/// Contact datum of the witness: equal densities and normal velocities.
pub fn witness_datum() -> RiemannDatum<Rational> {
    RiemannDatum {
        rho_minus: q(RHO_OUTER),
        rho_plus: q(RHO_OUTER),
        v_minus: [q(V_MINUS_1), q(V_2)],
        v_plus: [q(V_PLUS_1), q(V_2)],
    }
}

pub fn builtin_witness() -> FanConfiguration<Rational> {
    let states = (0..3)
        .map(|i| WaveState {
            rho: q(RHO[i]),
            alpha: q(ALPHA[i]),
            beta: q(BETA[i]),
            gamma: q(GAMMA[i]),
            delta: q(DELTA[i]),
            c: q(C[i]),
        })
        .collect();
    FanConfiguration {
        datum: witness_datum(),
        speeds: SPEEDS.iter().map(|s| q(s)).collect(),
        states,
        thermo: ThermoTable {
            eps_minus: q(EPS_OUTER),
            eps_plus: q(EPS_OUTER),
            deps_minus: q(DEPS_OUTER),
            deps_plus: q(DEPS_OUTER),
            eps: EPS.iter().map(|s| q(s)).collect(),
            deps: DEPS.iter().map(|s| q(s)).collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let w = builtin_witness();
        assert_eq!(
            w.datum.rho_minus.to_string(),
            "2708112612978501/281474976710656"
        );
        assert_eq!(w.speeds[2].to_string(), "-4856156003780791/562949953421312");
        assert!((w.states[0].alpha.to_f64() + 58.1).abs() < 0.05);
        w.validate().unwrap();
    }
}
