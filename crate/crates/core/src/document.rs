//! JSON configuration documents. Every number is a rational string; input
//! accepts `p/q`, integers and decimals, output is always `p/q`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::exactnum::Rational;
use crate::fan_model::{FanConfiguration, RiemannDatum, ThermoTable, WaveState};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("\"{key}\" has {found} entries, expected {expected}")]
    Length {
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("\"n_waves\" must be at least 1")]
    NoWaves,
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        let (line, column) = (e.line(), e.column());
        let full = e.to_string();
        let suffix = format!(" at line {line} column {column}");
        DocumentError::Syntax {
            line,
            column,
            message: full.strip_suffix(&suffix).unwrap_or(&full).to_string(),
        }
    }
}

/// Rational that always serializes as `p/q`.
#[derive(Clone, PartialEq)]
pub struct Pq(pub Rational);

impl fmt::Display for Pq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Pq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Serialize for Pq {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Rational::deserialize(d).map(Pq)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannDoc {
    pub rho_minus: Pq,
    pub rho_plus: Pq,
    pub v_minus: [Pq; 2],
    pub v_plus: [Pq; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionDoc {
    pub rho: Pq,
    pub alpha: Pq,
    pub beta: Pq,
    pub gamma: Pq,
    pub delta: Pq,
    #[serde(rename = "C")]
    pub c: Pq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoDoc {
    pub eps_minus: Pq,
    pub eps_plus: Pq,
    pub deps_minus: Pq,
    pub deps_plus: Pq,
    pub eps: Vec<Pq>,
    pub deps: Vec<Pq>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub n_waves: usize,
    pub riemann: RiemannDoc,
    pub speeds: Vec<Pq>,
    pub regions: Vec<RegionDoc>,
    pub thermo: ThermoDoc,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        let doc: ConfigDocument = serde_json::from_str(text)?;
        doc.check()?;
        Ok(doc)
    }

    fn check(&self) -> Result<(), DocumentError> {
        let n = self.n_waves;
        if n == 0 {
            return Err(DocumentError::NoWaves);
        }
        for (key, expected, found) in [
            ("speeds", n + 1, self.speeds.len()),
            ("regions", n, self.regions.len()),
            ("thermo.eps", n, self.thermo.eps.len()),
            ("thermo.deps", n, self.thermo.deps.len()),
        ] {
            if expected != found {
                return Err(DocumentError::Length {
                    key: key.into(),
                    expected,
                    found,
                });
            }
        }
        Ok(())
    }

    /// Canonical text: two-space indentation, fixed key order, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    pub fn from_config(cfg: &FanConfiguration<Rational>) -> Self {
        let q = |v: &Rational| Pq(v.clone());
        let qs = |v: &[Rational]| v.iter().map(q).collect::<Vec<_>>();
        let d = &cfg.datum;
        let t = &cfg.thermo;
        ConfigDocument {
            n_waves: cfg.n_waves(),
            riemann: RiemannDoc {
                rho_minus: q(&d.rho_minus),
                rho_plus: q(&d.rho_plus),
                v_minus: [q(&d.v_minus[0]), q(&d.v_minus[1])],
                v_plus: [q(&d.v_plus[0]), q(&d.v_plus[1])],
            },
            speeds: qs(&cfg.speeds),
            regions: cfg
                .states
                .iter()
                .map(|s| RegionDoc {
                    rho: q(&s.rho),
                    alpha: q(&s.alpha),
                    beta: q(&s.beta),
                    gamma: q(&s.gamma),
                    delta: q(&s.delta),
                    c: q(&s.c),
                })
                .collect(),
            thermo: ThermoDoc {
                eps_minus: q(&t.eps_minus),
                eps_plus: q(&t.eps_plus),
                deps_minus: q(&t.deps_minus),
                deps_plus: q(&t.deps_plus),
                eps: qs(&t.eps),
                deps: qs(&t.deps),
            },
        }
    }

    pub fn to_config(&self) -> FanConfiguration<Rational> {
        let q = |v: &Pq| v.0.clone();
        let qs = |v: &[Pq]| v.iter().map(q).collect::<Vec<_>>();
        let r = &self.riemann;
        let t = &self.thermo;
        FanConfiguration {
            datum: RiemannDatum {
                rho_minus: q(&r.rho_minus),
                rho_plus: q(&r.rho_plus),
                v_minus: [q(&r.v_minus[0]), q(&r.v_minus[1])],
                v_plus: [q(&r.v_plus[0]), q(&r.v_plus[1])],
            },
            speeds: qs(&self.speeds),
            states: self
                .regions
                .iter()
                .map(|s| WaveState {
                    rho: q(&s.rho),
                    alpha: q(&s.alpha),
                    beta: q(&s.beta),
                    gamma: q(&s.gamma),
                    delta: q(&s.delta),
                    c: q(&s.c),
                })
                .collect(),
            thermo: ThermoTable {
                eps_minus: q(&t.eps_minus),
                eps_plus: q(&t.eps_plus),
                deps_minus: q(&t.deps_minus),
                deps_plus: q(&t.deps_plus),
                eps: qs(&t.eps),
                deps: qs(&t.deps),
            },
        }
    }
}

pub fn read_config(text: &str) -> Result<FanConfiguration<Rational>, DocumentError> {
    Ok(ConfigDocument::parse(text)?.to_config())
}

pub fn write_config(cfg: &FanConfiguration<Rational>) -> String {
    ConfigDocument::from_config(cfg).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::builtin_witness;
    use proptest::prelude::*;

    #[test]
    fn witness_round_trips_byte_for_byte() {
        let w = builtin_witness();
        let text = write_config(&w);
        assert_eq!(read_config(&text).unwrap(), w);
        assert_eq!(write_config(&read_config(&text).unwrap()), text);
        assert!(text.contains("\"rho_minus\": \"2708112612978501/281474976710656\""));
        assert!(text.contains("\"C\": "));
    }

    #[test]
    fn integers_and_decimals_are_read_exactly_and_written_as_fractions() {
        let w = builtin_witness();
        let doc = ConfigDocument::from_config(&w);
        let text = doc
            .to_json()
            .replacen(&format!("\"{}\"", doc.riemann.v_plus[0]), "\"-14.25\"", 1)
            .replacen(&format!("\"{}\"", doc.thermo.deps[2]), "\"3\"", 1);
        let back = ConfigDocument::parse(&text).unwrap();
        assert_eq!(back.riemann.v_plus[0].to_string(), "-57/4");
        assert_eq!(back.thermo.deps[2].to_string(), "3/1");
    }

    #[test]
    fn errors_carry_their_location() {
        let text = write_config(&builtin_witness());
        let broken = text.replacen("\"speeds\": [", "\"speeds\": [\"1/0\",", 1);
        match ConfigDocument::parse(&broken) {
            Err(DocumentError::Syntax { line, .. }) => assert!(line > 1),
            other => panic!("{other:?}"),
        }
        let short = text.replacen("\"n_waves\": 3", "\"n_waves\": 2", 1);
        match ConfigDocument::parse(&short) {
            Err(DocumentError::Length {
                key,
                expected,
                found,
            }) => {
                assert_eq!((key.as_str(), expected, found), ("speeds", 3, 4));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            ConfigDocument::parse(&text[..text.len() / 2]),
            Err(DocumentError::Syntax { .. })
        ));
        let extra = text.replacen("\"n_waves\": 3", "\"n_waves\": 3, \"colour\": 1", 1);
        assert!(ConfigDocument::parse(&extra).is_err());
    }

    proptest! {
        #[test]
        fn float_configurations_round_trip(
            seed in any::<u64>(),
            n in 1usize..5,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut f = || rng.gen_range(-1e3..1e3f64);
            let st = |f: &mut dyn FnMut() -> f64| WaveState {
                rho: f(), alpha: f(), beta: f(), gamma: f(), delta: f(), c: f(),
            };
            let cfg = FanConfiguration {
                datum: RiemannDatum { rho_minus: f(), rho_plus: f(), v_minus: [f(), f()], v_plus: [f(), f()] },
                speeds: (0..=n).map(|_| f()).collect(),
                states: (0..n).map(|_| st(&mut f)).collect(),
                thermo: ThermoTable {
                    eps_minus: f(), eps_plus: f(), deps_minus: f(), deps_plus: f(),
                    eps: (0..n).map(|_| f()).collect(),
                    deps: (0..n).map(|_| f()).collect(),
                },
            };
            let exact = cfg.to_rational().unwrap();
            let text = write_config(&exact);
            let back = read_config(&text).unwrap();
            prop_assert_eq!(back.to_f64(), cfg);
            prop_assert_eq!(write_config(&back), text);
        }
    }
}
