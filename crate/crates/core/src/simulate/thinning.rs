use rand::distr::Open01;
use rand::Rng;

use super::{finish, strictly_after, SimConfig, Stop};
use crate::error::{Error, Result};
use crate::mlf::MlKernel;
use crate::model::{Catalog, Event};
use crate::rng;

/// Width of the window after each event handled by compensator inversion.
pub const DEFAULT_EPSILON: f64 = 1e-6;

struct History<'a> {
    config: &'a SimConfig,
    kernel: MlKernel,
    times: Vec<f64>,
    weights: Vec<f64>,
}

impl History<'_> {
    fn intensity(&self, t: f64) -> f64 {
        let p = &self.config.params;
        let s: f64 = self
            .times
            .iter()
            .zip(&self.weights)
            .map(|(&ti, &w)| w * self.kernel.density_unchecked(t - ti))
            .sum();
        p.lambda0 + p.alpha * s
    }

    /// `Λ(b) - Λ(a)` for `a ≤ b` with no events in between.
    fn increment(&self, a: f64, b: f64) -> f64 {
        let p = &self.config.params;
        let s: f64 = self
            .times
            .iter()
            .zip(&self.weights)
            .map(|(&ti, &w)| {
                w * (self.kernel.survival_unchecked(a - ti) - self.kernel.survival_unchecked(b - ti))
            })
            .sum();
        p.lambda0 * (b - a) + p.alpha * s
    }

    /// Point `t ∈ (a, b]` with `Λ(t) - Λ(a) = target`, by bisection.
    fn invert(&self, a: f64, b: f64, target: f64) -> f64 {
        let (mut lo, mut hi) = (a, b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.increment(a, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

/// Ogata thinning with an ε-offset bound.
///
/// The kernel decreases in elapsed time, so between events `λ(s)` bounds the
/// intensity from `s` on. Right after an event the bound is infinite; on
/// `(t_last, t_last + ε]` the next point is instead found by inverting the
/// compensator. Quadratic in the number of events; meant as a cross-check of
/// [`super::simulate_fhp`].
pub fn simulate_fhp_thinning(config: &SimConfig, epsilon: f64) -> Result<Catalog> {
    config.validate()?;
    if !(epsilon > 0.0) {
        return Err(Error::domain("epsilon must be positive"));
    }
    let p = config.params;
    let mut rng = rng::stream(config.seed, 1);
    let (target, horizon) = match config.stop {
        Stop::Count(n) => (n, f64::INFINITY),
        Stop::Horizon(t) => (usize::MAX, t),
    };
    let mut h = History {
        config,
        kernel: MlKernel::new(p.beta, p.c)?,
        times: Vec::new(),
        weights: Vec::new(),
    };
    let mut events: Vec<Event> = Vec::new();
    let mut s = 0.0;
    let exp1 = |rng: &mut rng::SimRng| -rng.sample::<f64, _>(Open01).ln();

    while events.len() < target {
        let mut accepted = None;
        if let Some(&last) = h.times.last() {
            let edge = last + epsilon;
            if s < edge {
                let e = exp1(&mut rng);
                let mass = h.increment(s, edge);
                if mass >= e {
                    accepted = Some(h.invert(s, edge, e));
                } else {
                    s = edge;
                }
            }
        }
        if accepted.is_none() {
            let bound = h.intensity(s);
            if !(bound > 0.0) {
                if p.lambda0 == 0.0 && h.times.is_empty() {
                    return Err(Error::Simulation("λ₀ = 0 produces no events".into()));
                }
                return Err(Error::Simulation(format!("intensity bound {bound} at {s}")));
            }
            let u = s + exp1(&mut rng) / bound;
            if u > horizon {
                break;
            }
            let v: f64 = rng.random();
            s = u;
            if v * bound <= h.intensity(u) {
                accepted = Some(u);
            } else {
                continue;
            }
        }
        let t = accepted.expect("set above");
        if t > horizon {
            break;
        }
        let t = strictly_after(t, h.times.last().copied());
        let magnitude = config.magnitude.sample(&mut rng);
        h.times.push(t);
        h.weights.push((p.gamma * (magnitude - config.magnitude.m0)).exp());
        events.push(Event { time: t, magnitude });
        s = t;
        if events.len() > config.event_cap {
            return Err(Error::Simulation(format!(
                "event cap {} exceeded at t = {t}",
                config.event_cap
            )));
        }
    }
    finish(events, config)
}
