//! Flat variable vector of a configuration with a fixed Riemann datum.

use rand::Rng;

use crate::exactnum::Scalar;
use crate::fan_model::{FanConfiguration, RiemannDatum, ThermoTable, WaveState};
use crate::system::{equality_residuals, inequality_margins_with, BoundsTable};

/// Order: speeds `0..=N`, then `(rho, alpha, beta, a, b, c)` per region,
/// then `eps-`, `eps'-`, (`eps+`, `eps'+` unless tied), `eps_1..N`, `eps'_1..N`.
/// With `rho+ = rho-` the right energy entries are tied to the left ones.
/// `a = C/2 - alpha^2 + gamma`, `b = C/2 - beta^2 - gamma` and `c = delta - alpha beta`
/// are the entries of the region's stress matrix, so its trace and determinant
/// margins do not depend on the velocities.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub n: usize,
    pub tied: bool,
    /// The right outer state is its own convexity knot.
    pub plus_knot: bool,
    pub datum: RiemannDatum<f64>,
}

impl Layout {
    pub fn new(datum: &RiemannDatum<f64>, n: usize, include_right_knot: bool) -> Self {
        let tied = datum.rho_plus == datum.rho_minus;
        Layout {
            n,
            tied,
            plus_knot: include_right_knot && !tied,
            datum: datum.clone(),
        }
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        9 * self.n + 3 + if self.tied { 0 } else { 2 }
    }

    fn thermo_base(&self) -> usize {
        7 * self.n + 1
    }

    fn eps_base(&self) -> usize {
        self.thermo_base() + if self.tied { 2 } else { 4 }
    }

    pub fn rho_indices(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.n + 1 + 6 * i).collect()
    }

    pub fn scales(&self, b: &BoundsTable) -> Vec<f64> {
        let mut s = vec![b.speed as f64; self.n + 1];
        for _ in 0..self.n {
            let m = (b.c as f64).sqrt();
            s.extend([b.rho as f64, b.alpha as f64, b.beta as f64, m, m, m]);
        }
        let pairs = if self.tied { 1 } else { 2 };
        for _ in 0..pairs {
            s.extend([b.eps as f64, b.deps as f64]);
        }
        s.extend(std::iter::repeat(b.eps as f64).take(self.n));
        s.extend(std::iter::repeat(b.deps as f64).take(self.n));
        s
    }

    pub fn pack(&self, cfg: &FanConfiguration<f64>) -> Vec<f64> {
        let mut x = cfg.speeds.clone();
        for s in &cfg.states {
            let h = s.c / 2.0;
            x.extend([
                s.rho,
                s.alpha,
                s.beta,
                h - s.alpha * s.alpha + s.gamma,
                h - s.beta * s.beta - s.gamma,
                s.delta - s.alpha * s.beta,
            ]);
        }
        let t = &cfg.thermo;
        x.extend([t.eps_minus, t.deps_minus]);
        if !self.tied {
            x.extend([t.eps_plus, t.deps_plus]);
        }
        x.extend(&t.eps);
        x.extend(&t.deps);
        x
    }

    pub fn unpack<S: Scalar>(&self, x: &[S], konst: impl Fn(f64) -> S) -> FanConfiguration<S> {
        let n = self.n;
        let speeds = x[..=n].to_vec();
        let states = (0..n)
            .map(|i| {
                let k = n + 1 + 6 * i;
                let (alpha, beta) = (x[k + 1].clone(), x[k + 2].clone());
                let (a, b, c) = (x[k + 3].clone(), x[k + 4].clone(), x[k + 5].clone());
                let (aa, bb) = (alpha.square(), beta.square());
                WaveState {
                    rho: x[k].clone(),
                    gamma: (a.clone() - b.clone() + aa.clone() - bb.clone()).half(),
                    delta: c + alpha.clone() * beta.clone(),
                    c: a + b + aa + bb,
                    alpha,
                    beta,
                }
            })
            .collect();
        let tb = self.thermo_base();
        let (eps_plus, deps_plus) = if self.tied {
            (x[tb].clone(), x[tb + 1].clone())
        } else {
            (x[tb + 2].clone(), x[tb + 3].clone())
        };
        let eb = self.eps_base();
        FanConfiguration {
            datum: self.datum.map(|v| konst(*v)),
            speeds,
            states,
            thermo: ThermoTable {
                eps_minus: x[tb].clone(),
                eps_plus,
                deps_minus: x[tb + 1].clone(),
                deps_plus,
                eps: x[eb..eb + n].to_vec(),
                deps: x[eb + n..eb + 2 * n].to_vec(),
            },
        }
    }

    /// Jump residuals and strict-inequality margins.
    pub fn system<S: Scalar>(&self, x: &[S], konst: impl Fn(f64) -> S) -> (Vec<S>, Vec<S>) {
        let cfg = self.unpack(x, konst);
        let r = equality_residuals(&cfg)
            .into_iter()
            .map(|e| e.value)
            .collect();
        let g = inequality_margins_with(&cfg, self.plus_knot)
            .into_iter()
            .map(|e| e.value)
            .collect();
        (r, g)
    }

    /// Random start inside the box: ordered speeds, positive definite stresses
    /// and energy values sampled from a convex quadratic.
    pub fn random_start(&self, b: &BoundsTable, rng: &mut impl Rng) -> FanConfiguration<f64> {
        let n = self.n;
        let sym = |rng: &mut dyn rand::RngCore, m: i64| -> f64 {
            let m = m as f64;
            -m + 2.0 * m * rng.gen::<f64>()
        };
        let mut speeds: Vec<f64> = (0..=n).map(|_| sym(rng, b.speed)).collect();
        speeds.sort_by(|a, c| a.total_cmp(c));
        let mut states = Vec::with_capacity(n);
        for _ in 0..n {
            let rho = 1.0 + (b.rho as f64 - 1.0).max(0.0) * rng.gen::<f64>();
            let alpha = sym(rng, b.alpha);
            let beta = sym(rng, b.beta);
            let room = ((b.c as f64 - alpha * alpha - beta * beta) / 2.0).max(1.0);
            let r11 = room * rng.gen::<f64>();
            let r22 = room * rng.gen::<f64>();
            let r12 = 0.9 * (2.0 * rng.gen::<f64>() - 1.0) * (r11 * r22).sqrt();
            let c = alpha * alpha + beta * beta + r11 + r22;
            let clamp = |v: f64, m: i64| v.clamp(-(m as f64), m as f64);
            states.push(WaveState {
                rho,
                alpha,
                beta,
                gamma: clamp(r11 - c / 2.0 + alpha * alpha, b.gamma),
                delta: clamp(r12 + alpha * beta, b.delta),
                c: c.min(b.c as f64),
            });
        }
        let curv = 0.05 + 0.45 * rng.gen::<f64>();
        let lin = -5.0 + 10.0 * rng.gen::<f64>();
        let base = -(b.eps as f64) * rng.gen::<f64>();
        let e = |r: f64| base + lin * r + curv * r * r;
        let de = |r: f64| lin + 2.0 * curv * r;
        let d = &self.datum;
        let thermo = ThermoTable {
            eps_minus: e(d.rho_minus),
            eps_plus: e(d.rho_plus),
            deps_minus: de(d.rho_minus),
            deps_plus: de(d.rho_plus),
            eps: states.iter().map(|s: &WaveState<f64>| e(s.rho)).collect(),
            deps: states.iter().map(|s: &WaveState<f64>| de(s.rho)).collect(),
        };
        FanConfiguration {
            datum: d.clone(),
            speeds,
            states,
            thermo,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witness::builtin_witness;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &FanConfiguration<f64>, b: &FanConfiguration<f64>) {
        assert_eq!(a.datum, b.datum);
        assert_eq!(a.thermo, b.thermo);
        assert_eq!(a.speeds, b.speeds);
        for (p, q) in a.states.iter().zip(&b.states) {
            for (u, v) in [
                (p.rho, q.rho),
                (p.alpha, q.alpha),
                (p.beta, q.beta),
                (p.gamma, q.gamma),
                (p.delta, q.delta),
                (p.c, q.c),
            ] {
                assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0), "{u} {v}");
            }
        }
    }

    #[test]
    fn pack_unpack_round_trip() {
        let w = builtin_witness().to_f64();
        let l = Layout::new(&w.datum, 3, true);
        assert!(l.tied);
        let x = l.pack(&w);
        assert_eq!(x.len(), l.dim());
        assert_eq!(l.scales(&BoundsTable::default()).len(), l.dim());
        close(&l.unpack(&x, |v| v), &w);
        let mut d = w.datum.clone();
        d.rho_plus += 0.25;
        let l = Layout::new(&d, 3, true);
        let mut cfg = w.clone();
        cfg.datum = d;
        let x = l.pack(&cfg);
        assert_eq!(x.len(), l.dim());
        close(&l.unpack(&x, |v| v), &cfg);
    }

    #[test]
    fn random_start_is_ordered_and_in_the_box() {
        let w = builtin_witness().to_f64();
        let l = Layout::new(&w.datum, 3, true);
        let b = BoundsTable::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = l.random_start(&b, &mut rng);
            assert!(c.speeds.windows(2).all(|p| p[0] <= p[1]));
            assert!(c.states.iter().all(|s| s.rho >= 1.0 && s.c <= 3714.0));
        }
    }
}
