//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use fhp_core::mlf::MittagLeffler;
use fhp_core::{Catalog, EtasParams, Event, FhpParams, MlKernel};
use quadrature::double_exponential::integrate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// Clustered synthetic catalog: bursts of short gaps between long ones.
pub fn random_catalog(rng: &mut ChaCha8Rng, n: usize, m0: f64) -> Catalog {
    let mut t = rng.random_range(0.0..2.0);
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        events.push(Event::new(t, m0 - 0.5 * rng.random::<f64>().ln()));
        let scale = if rng.random::<f64>() < 0.7 { 0.05 } else { 3.0 };
        t += -scale * rng.random::<f64>().ln() + 1e-6;
    }
    Catalog::new(events, m0, 0.0, t + rng.random_range(0.0..5.0), "random").unwrap()
}

pub fn random_fhp(rng: &mut ChaCha8Rng, beta: Option<f64>) -> FhpParams {
    FhpParams::new(
        rng.random_range(0.05..2.0),
        rng.random_range(0.05..0.9),
        rng.random_range(0.0..1.5),
        beta.unwrap_or_else(|| rng.random_range(0.2..1.0)),
        rng.random_range(0.1..5.0),
    )
}

pub fn random_etas(rng: &mut ChaCha8Rng) -> EtasParams {
    EtasParams::new(
        rng.random_range(0.05..2.0),
        rng.random_range(0.01..1.0),
        rng.random_range(0.0..1.5),
        rng.random_range(0.005..0.5),
        rng.random_range(0.8..1.8),
    )
}

/// Exponential-kernel Hawkes log-likelihood `λ₀ + α Σ w_j c e^{-c(t - t_j)}`
/// on `[t_start, t_end]`, by the usual O(N) recursion.
pub fn exp_hawkes_loglik(cat: &Catalog, lambda0: f64, alpha: f64, gamma: f64, c: f64) -> f64 {
    let ev = cat.events();
    let w: Vec<f64> = ev.iter().map(|e| (gamma * (e.magnitude - cat.m0())).exp()).collect();
    let mut a = 0.0;
    let mut log_sum = 0.0;
    for i in 0..ev.len() {
        if i > 0 {
            a = (-c * (ev[i].time - ev[i - 1].time)).exp() * (a + w[i - 1]);
        }
        log_sum += (lambda0 + alpha * c * a).ln();
    }
    let t_end = cat.t_end();
    let comp: f64 = ev
        .iter()
        .zip(&w)
        .map(|(e, wi)| wi * -(-c * (t_end - e.time)).exp_m1())
        .sum();
    log_sum - lambda0 * (t_end - cat.t_start()) - alpha * comp
}

fn de(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate(f, a, b, 1e-13).integral
}

/// Split `[start, t]` at the events inside it. Each piece is
/// `(left_end, length, index of the event at left_end)`.
fn pieces(cat: &Catalog, start: f64, t: f64) -> Vec<(f64, f64, Option<usize>)> {
    let mut out = Vec::new();
    let mut left = (start, None);
    for (i, e) in cat.events().iter().enumerate() {
        if e.time < start {
            continue;
        }
        if e.time > t {
            break;
        }
        if e.time > left.0 {
            out.push((left.0, e.time - left.0, left.1));
        }
        left = (e.time, Some(i));
    }
    if t > left.0 {
        out.push((left.0, t - left.0, left.1));
    }
    out
}

/// `∫_start^t λ(s) ds` for the FHP, integrating piecewise between events.
///
/// On a piece starting at event `i` the substitution `s = L u^{1/β}` turns
/// the `s^{β-1}` singularity of the newest term into the smooth
/// `(cL)^β / β · E_{β,β}(-(cL)^β u)`.
pub fn fhp_compensator_quadrature(cat: &Catalog, p: &FhpParams, restricted: bool, t: f64) -> f64 {
    let ev = cat.events();
    let start = if restricted { ev[0].time } else { cat.t_start() };
    let base = if restricted { 0.0 } else { p.lambda0 };
    let kernel = MlKernel::new(p.beta, p.c).unwrap();
    let ebb = MittagLeffler::new(p.beta, p.beta).unwrap();
    let w: Vec<f64> = ev.iter().map(|e| (p.gamma * (e.magnitude - cat.m0())).exp()).collect();
    let b = p.beta;
    let mut total = 0.0;
    for (left, len, newest) in pieces(cat, start, t) {
        let older = newest.unwrap_or(ev.partition_point(|e| e.time < left));
        let smooth = |s: f64| {
            base + p.alpha
                * (0..older)
                    .map(|j| w[j] * kernel.density(left + s - ev[j].time).unwrap())
                    .sum::<f64>()
        };
        let integral = match newest {
            Some(i) => {
                let x = (p.c * len).powf(b);
                de(
                    |u: f64| {
                        let s = len * u.powf(1.0 / b);
                        let jac = len / b * u.powf(1.0 / b - 1.0);
                        smooth(s) * jac + p.alpha * w[i] * x / b * ebb.eval_neg(x * u)
                    },
                    0.0,
                    1.0,
                )
            }
            None => de(smooth, 0.0, len),
        };
        total += integral;
    }
    total
}

/// `∫_{t_start}^t λ(s) ds` for ETAS, in the variable `v = ln(1 + s/c_E)`
/// measured from the newest event on each piece.
pub fn etas_compensator_quadrature(cat: &Catalog, p: &EtasParams, t: f64) -> f64 {
    let ev = cat.events();
    let w: Vec<f64> = ev.iter().map(|e| (p.delta * (e.magnitude - cat.m0())).exp()).collect();
    let lam = |x: f64, upto: usize| {
        p.mu + p.a
            * (0..upto)
                .map(|j| w[j] * (1.0 + (x - ev[j].time) / p.c_e).powf(-p.p))
                .sum::<f64>()
    };
    let mut total = 0.0;
    for (left, len, newest) in pieces(cat, cat.t_start(), t) {
        let upto = newest.map_or(ev.partition_point(|e| e.time < left), |i| i + 1);
        let vmax = (len / p.c_e).ln_1p();
        total += de(
            |v: f64| {
                let s = p.c_e * v.exp_m1();
                lam(left + s, upto) * p.c_e * v.exp()
            },
            0.0,
            vmax,
        );
    }
    total
}
