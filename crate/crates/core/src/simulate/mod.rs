//! Synthetic FHP catalogs, tapered-Pareto magnitudes, and the
//! parameter-recovery study.
//!
//! The primary sampler is the branching construction: immigrants arrive as a
//! Poisson process with rate `λ₀`, and an event of excess magnitude `m` has
//! `Poisson(α e^{γm})` children whose delays are Mittag-Leffler variates.
//! Events are generated in time order from a priority queue, so both the
//! horizon and the event-count stopping rules are exact.

mod study;
mod thinning;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::mlf::MlKernel;
use crate::model::{Catalog, Event, FhpParams};
use crate::rng;

pub use study::{
    consistency_study, parse_study_table, run_replicate, study_table, summarize_study, ParamSummary,
    SizeSummary, StudyOptions, StudyRow, STUDY_HEADER,
};
pub use thinning::{simulate_fhp_thinning, DEFAULT_EPSILON};

/// How "an exponential variable with parameter η⁻¹" is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpReading {
    /// Mean `1/η`, i.e. rate `η`.
    #[default]
    MeanInvEta,
    /// Rate `1/η`, i.e. mean `η`.
    RateInvEta,
}

/// Minimum of a shifted exponential and a generalized Pareto variable.
///
/// The Pareto part has shape `1/ξ`, location `M₀` and scale `M₀ξ`, so its
/// excess survival is `(1 + y/(M₀ξ²))^{-ξ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeLaw {
    pub eta: f64,
    pub xi: f64,
    pub m0: f64,
    pub reading: ExpReading,
}

impl MagnitudeLaw {
    pub fn new(eta: f64, xi: f64, m0: f64) -> Result<Self> {
        let law = MagnitudeLaw {
            eta,
            xi,
            m0,
            reading: ExpReading::default(),
        };
        law.validate()?;
        Ok(law)
    }

    pub fn with_reading(mut self, reading: ExpReading) -> Self {
        self.reading = reading;
        self
    }

    /// The simulation-study law: `η = 2`, `ξ = 3`, `M₀ = 2.5`.
    pub fn reference() -> Self {
        MagnitudeLaw {
            eta: 2.0,
            xi: 3.0,
            m0: 2.5,
            reading: ExpReading::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta > 0.0 && self.xi > 0.0 && self.m0 > 0.0 && self.eta.is_finite() && self.xi.is_finite() && self.m0.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid magnitude law {self:?}")))
        }
    }

    /// Rate of the exponential component.
    pub fn exp_rate(&self) -> f64 {
        match self.reading {
            ExpReading::MeanInvEta => self.eta,
            ExpReading::RateInvEta => 1.0 / self.eta,
        }
    }

    fn pareto_scale(&self) -> f64 {
        self.m0 * self.xi * self.xi
    }

    /// `P(M > m)`.
    pub fn survival(&self, m: f64) -> f64 {
        if m <= self.m0 {
            return 1.0;
        }
        let y = m - self.m0;
        (-self.exp_rate() * y).exp() * (1.0 + y / self.pareto_scale()).powf(-self.xi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        let v: f64 = rng.sample(Open01);
        let e = -u.ln() / self.exp_rate();
        let g = self.pareto_scale() * (v.powf(-1.0 / self.xi) - 1.0);
        self.m0 + e.min(g)
    }

    /// `E[e^{γ(M - M₀)}]`, or `None` when it diverges.
    pub fn mean_productivity(&self, gamma: f64) -> Option<f64> {
        let rate = self.exp_rate();
        if gamma >= rate {
            return None;
        }
        if gamma == 0.0 {
            return Some(1.0);
        }
        // E[e^{γY}] = 1 + γ ∫ e^{γy} S(y) dy, composite Simpson.
        let upper = 40.0 / (rate - gamma);
        let n = 20_000;
        let h = upper / n as f64;
        let f = |y: f64| (gamma * y).exp() * self.survival(self.m0 + y);
        let mut s = f(0.0) + f(upper);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        Some(1.0 + gamma * s * h / 3.0)
    }
}

pub fn draw_magnitude<R: Rng + ?Sized>(law: &MagnitudeLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

/// When to stop simulating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    /// The first `n` events.
    Count(usize),
    /// All events in `[0, t_max]`.
    Horizon(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: FhpParams,
    pub stop: Stop,
    pub seed: u64,
    pub magnitude: MagnitudeLaw,
    /// Abort once this many events have been generated or queued.
    pub event_cap: usize,
    pub label: String,
}

impl SimConfig {
    pub fn new(params: FhpParams, stop: Stop, seed: u64) -> Self {
        SimConfig {
            params,
            stop,
            seed,
            magnitude: MagnitudeLaw::reference(),
            event_cap: 2_000_000,
            label: "simulated".to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.magnitude.validate()?;
        match self.stop {
            Stop::Count(0) => Err(Error::domain("target count must be positive")),
            Stop::Horizon(t) if !(t > 0.0 && t.is_finite()) => {
                Err(Error::domain(format!("horizon {t} must be positive and finite")))
            }
            _ => Ok(()),
        }
    }

    /// Mean offspring per event, `α E[e^{γ(M - M₀)}]`; `None` if infinite.
    pub fn branching_ratio(&self) -> Option<f64> {
        self.magnitude
            .mean_productivity(self.params.gamma)
            .map(|m| self.params.alpha * m)
    }

    /// Whether the configuration is supercritical (or has infinite mean).
    pub fn is_supercritical(&self) -> bool {
        self.branching_ratio().is_none_or(|r| r >= 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    immigrant: bool,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on time.
        other.time.total_cmp(&self.time)
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn finish(events: Vec<Event>, config: &SimConfig) -> Result<Catalog> {
    let t_end = match config.stop {
        Stop::Horizon(t) => t,
        Stop::Count(_) => events.last().map_or(0.0, |e| e.time),
    };
    Catalog::new(events, config.magnitude.m0, 0.0, t_end, config.label.clone())
}

/// Follow the last emitted time when a draw does not advance; only matters
/// for delays below the resolution of the current time.
pub(crate) fn strictly_after(t: f64, last: Option<f64>) -> f64 {
    match last {
        Some(l) if t <= l => l.next_up(),
        _ => t,
    }
}

/// Branching (cluster) simulation.
pub fn simulate_fhp(config: &SimConfig) -> Result<Catalog> {
    config.validate()?;
    let p = &config.params;
    let kernel = MlKernel::new(p.beta, p.c)?;
    let mut rng = rng::stream(config.seed, 0);
    let (target, horizon) = match config.stop {
        Stop::Count(n) => (n, f64::INFINITY),
        Stop::Horizon(t) => (usize::MAX, t),
    };
    if p.lambda0 == 0.0 {
        return Err(Error::Simulation("λ₀ = 0 produces no events".into()));
    }

    let mut queue = BinaryHeap::new();
    let first = -rng.sample::<f64, _>(Open01).ln() / p.lambda0;
    queue.push(Pending {
        time: first,
        immigrant: true,
    });
    let mut events: Vec<Event> = Vec::new();
    while let Some(next) = queue.pop() {
        if next.time > horizon || events.len() >= target {
            break;
        }
        if next.immigrant {
            let gap = -rng.sample::<f64, _>(Open01).ln() / p.lambda0;
            queue.push(Pending {
                time: next.time + gap,
                immigrant: true,
            });
        }
        let time = strictly_after(next.time, events.last().map(|e| e.time));
        let magnitude = config.magnitude.sample(&mut rng);
        let mean = p.alpha * (p.gamma * (magnitude - config.magnitude.m0)).exp();
        let children = if mean > 0.0 {
            let dist = Poisson::new(mean).map_err(|e| Error::Simulation(e.to_string()))?;
            dist.sample(&mut rng) as usize
        } else {
            0
        };
        for _ in 0..children {
            queue.push(Pending {
                time: time + kernel.sample(&mut rng),
                immigrant: false,
            });
        }
        events.push(Event { time, magnitude });
        if events.len() + queue.len() > config.event_cap {
            return Err(Error::Simulation(format!(
                "event cap {} exceeded at t = {time} ({} emitted, {} queued); \
                 the configuration is explosive",
                config.event_cap,
                events.len(),
                queue.len()
            )));
        }
    }
    finish(events, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn magnitudes_respect_cutoff_and_survival() {
        let law = MagnitudeLaw::reference();
        let mut rng = stream(3, 0);
        let mut draws: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&m| m >= 2.5));
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let d = draws
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let cdf = 1.0 - law.survival(m);
                (cdf - i as f64 / n).abs().max((cdf - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.6276 / n.sqrt(), "D = {d}");
    }

    #[test]
    fn large_xi_approaches_exponential() {
        let law = MagnitudeLaw::new(2.0, 1e6, 2.5).unwrap();
        for m in [2.6f64, 3.0, 4.0] {
            let exp = (-2.0 * (m - 2.5)).exp();
            assert!((law.survival(m) - exp).abs() < 1e-6 * exp);
        }
    }

    #[test]
    fn productivity() {
        let law = MagnitudeLaw::new(2.0, 1e9, 2.5).unwrap();
        // Pure exponential excess: E[e^{γY}] = rate / (rate - γ).
        let m = law.mean_productivity(1.0).unwrap();
        assert!((m - 2.0).abs() < 1e-4, "{m}");
        assert!(law.mean_productivity(2.5).is_none());
        let alt = MagnitudeLaw::reference().with_reading(ExpReading::RateInvEta);
        assert_eq!(alt.exp_rate(), 0.5);
    }

    #[test]
    fn poisson_count_and_determinism() {
        let p = FhpParams::new(2.0, 0.0, 1.0, 0.7, 1.0);
        let cfg = SimConfig::new(p, Stop::Horizon(1000.0), 9);
        let a = simulate_fhp(&cfg).unwrap();
        let b = simulate_fhp(&cfg).unwrap();
        assert_eq!(a, b);
        assert!((a.len() as f64 - 2000.0).abs() < 3.0 * 2000f64.sqrt());
        assert_eq!(a.t_end(), 1000.0);
    }

    #[test]
    fn count_mode_and_cap() {
        let p = FhpParams::new(1.0, (-1.0f64).exp(), 1.5, 0.7, 1.0);
        let mut cfg = SimConfig::new(p, Stop::Count(750), 1);
        assert!(cfg.is_supercritical() || cfg.branching_ratio().unwrap() < 1.0);
        let c = simulate_fhp(&cfg).unwrap();
        assert_eq!(c.len(), 750);
        cfg.stop = Stop::Horizon(1e9);
        cfg.params.alpha = 1.0;
        cfg.event_cap = 5000;
        assert!(matches!(simulate_fhp(&cfg), Err(Error::Simulation(_))));
    }

    #[test]
    fn mean_offspring_matches_alpha() {
        // γ = 0: each event has Poisson(α) children. Count the clusters of
        // a single immigrant over a long horizon.
        let alpha = 0.4;
        let p = FhpParams::new(1e-3, alpha, 0.0, 0.8, 5.0);
        let mut total = 0usize;
        let reps = 300;
        for s in 0..reps {
            let cfg = SimConfig::new(p, Stop::Horizon(1e5), s);
            total += simulate_fhp(&cfg).unwrap().len();
        }
        // Compound Poisson over clusters: mean λ₀T/(1-α), variance λ₀T E[S²].
        let clusters = 1e-3 * 1e5 * reps as f64;
        let want = clusters / (1.0 - alpha);
        let es2 = alpha / (1.0 - alpha).powi(3) + 1.0 / (1.0 - alpha).powi(2);
        let sd = (clusters * es2).sqrt();
        assert!((total as f64 - want).abs() < 4.0 * sd, "{total} vs {want}");
    }
}
