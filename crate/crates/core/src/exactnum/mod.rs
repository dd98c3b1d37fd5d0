//! Scalar layer: exact rationals, rational-endpoint intervals, binary64, and
//! forward-mode duals over any of them. The algebraic system is generic over
//! [`Scalar`], so the same expressions are evaluated exactly, in floating point,
//! with derivatives, or as enclosures.

mod dual;
mod interval;
mod rational;
mod scalar;

pub use dual::Dual;
pub use interval::{interval_hull, Interval};
pub use rational::Rational;
pub use scalar::{Real, Scalar};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("{0} is not representable as a rational (not finite)")]
    NotRepresentable(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse {0:?} as a rational number")]
    Parse(String),
    #[error("interval lower bound exceeds upper bound")]
    EmptyInterval,
    #[error("empty input")]
    EmptyInput,
    #[error("domain error: {0}")]
    Domain(&'static str),
}

/// Exact conversion of a finite binary64 value.
pub fn rational_from_float(x: f64) -> Result<Rational, NumError> {
    Rational::from_f64(x)
}

#[cfg(test)]
mod proptests {
    use super::*;
    use num_integer::Integer;
    use num_traits::Signed;
    use proptest::prelude::*;

    fn canonical(r: &Rational) -> bool {
        r.denom().is_positive() && r.numer().gcd(r.denom()) == num_bigint::BigInt::from(1)
            || (r.is_zero() && *r.denom() == num_bigint::BigInt::from(1))
    }

    fn rat() -> impl Strategy<Value = Rational> {
        (-10_000i64..10_000, 1i64..5_000).prop_map(|(p, q)| Rational::new(p, q).unwrap())
    }

    fn interval() -> impl Strategy<Value = (Interval, Rational)> {
        (rat(), rat(), 0u32..=1000).prop_map(|(a, b, t)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let frac = Rational::new(t as i64, 1000).unwrap();
            let x = &lo + &(&(&hi - &lo) * &frac);
            (Interval::new(lo, hi).unwrap(), x)
        })
    }

    proptest! {
        #[test]
        fn float_round_trip(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let r = rational_from_float(x).unwrap();
            prop_assert_eq!(r.to_f64().to_bits(), if x == 0.0 { 0.0f64.to_bits() } else { x.to_bits() });
        }

        #[test]
        fn arithmetic_stays_canonical(a in rat(), b in rat()) {
            prop_assert!(canonical(&(&a + &b)));
            prop_assert!(canonical(&(&a - &b)));
            prop_assert!(canonical(&(&a * &b)));
            if !b.is_zero() {
                prop_assert!(canonical(&a.checked_div(&b).unwrap()));
            }
        }

        #[test]
        fn interval_ops_enclose((x, xs) in interval(), (y, ys) in interval()) {
            prop_assert!((&x + &y).contains(&(&xs + &ys)));
            prop_assert!((&x - &y).contains(&(&xs - &ys)));
            prop_assert!((&x * &y).contains(&(&xs * &ys)));
            if !y.contains_zero() {
                prop_assert!(x.checked_div(&y).unwrap().contains(&(&xs / &ys)));
            }
        }
    }

    #[test]
    fn enclosure_sampled_ten_thousand_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
            Rational::new(rng.gen_range(-500i64..500), rng.gen_range(1i64..64)).unwrap()
        };
        for _ in 0..10_000 {
            let (a, b, c, d) = (
                draw(&mut rng),
                draw(&mut rng),
                draw(&mut rng),
                draw(&mut rng),
            );
            let x = Interval::new(a.clone().min(b.clone()), a.max(b)).unwrap();
            let y = Interval::new(c.clone().min(d.clone()), c.max(d)).unwrap();
            let t = Rational::new(rng.gen_range(0i64..=16), 16).unwrap();
            let s = Rational::new(rng.gen_range(0i64..=16), 16).unwrap();
            let xs = x.lo() + &(&x.width() * &t);
            let ys = y.lo() + &(&y.width() * &s);
            assert!((&x * &y).contains(&(&xs * &ys)));
            assert!((&x - &y).contains(&(&xs - &ys)));
            if let Ok(q) = x.checked_div(&y) {
                assert!(q.contains(&(&xs / &ys)));
            }
        }
    }
}
