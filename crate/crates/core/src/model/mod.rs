//! Catalogs, parameter vectors, and the conditional intensity, compensator
//! and log-likelihood of the fractional Hawkes process and ETAS.
//!
//! Times are in days. Both models couple magnitudes only through the excess
//! `M_i - M_0`, with intensities evaluated as left limits (`t_i < t`).

mod etas;
mod fhp;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use etas::{etas_compensator, etas_intensity, etas_loglik};
pub use fhp::{fhp_compensator, fhp_intensity, fhp_loglik, FhpLikelihood};

/// One earthquake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Days since the catalog epoch.
    pub time: f64,
    pub magnitude: f64,
}

impl Event {
    pub fn new(time: f64, magnitude: f64) -> Self {
        Event { time, magnitude }
    }
}

/// Provenance carried alongside the events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CatalogMeta {
    /// UTC timestamp of time zero, when the catalog came from a file.
    pub epoch: Option<String>,
    /// Number of exact time ties broken at ingestion.
    pub ties_perturbed: usize,
}

/// A validated, strictly time-ordered event sequence with its cutoff
/// magnitude and observation window.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    events: Vec<Event>,
    m0: f64,
    t_start: f64,
    t_end: f64,
    label: String,
    meta: CatalogMeta,
}

impl Catalog {
    pub fn new(
        events: Vec<Event>,
        m0: f64,
        t_start: f64,
        t_end: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !m0.is_finite() {
            return Err(Error::domain("cutoff magnitude must be finite"));
        }
        if !(t_start.is_finite() && t_end.is_finite() && t_start <= t_end) {
            return Err(Error::domain(format!(
                "invalid window [{t_start}, {t_end}]"
            )));
        }
        for (i, e) in events.iter().enumerate() {
            if !(e.time.is_finite() && e.magnitude.is_finite()) {
                return Err(Error::domain(format!("event {i} is not finite")));
            }
            if e.magnitude < m0 {
                return Err(Error::domain(format!(
                    "event {i} has magnitude {} below cutoff {m0}",
                    e.magnitude
                )));
            }
            if i > 0 && e.time <= events[i - 1].time {
                return Err(Error::domain(format!(
                    "event {i} at {} does not follow {}",
                    e.time,
                    events[i - 1].time
                )));
            }
        }
        if let (Some(first), Some(last)) = (events.first(), events.last()) {
            if first.time < t_start || last.time > t_end {
                return Err(Error::domain("events fall outside the window"));
            }
        }
        Ok(Catalog {
            events,
            m0,
            t_start,
            t_end,
            label: label.into(),
            meta: CatalogMeta::default(),
        })
    }

    /// Catalog whose window runs from the first to the last event.
    pub fn from_events(events: Vec<Event>, m0: f64, label: impl Into<String>) -> Result<Self> {
        let t_start = events.first().map_or(0.0, |e| e.time);
        let t_end = events.last().map_or(0.0, |e| e.time);
        Catalog::new(events, m0, t_start, t_end, label)
    }

    pub fn with_meta(mut self, meta: CatalogMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn meta(&self) -> &CatalogMeta {
        &self.meta
    }

    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.time).collect()
    }

    /// Magnitude excesses `M_i - M_0`.
    pub fn excess(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.magnitude - self.m0).collect()
    }

    /// Number of events strictly before `t`.
    pub fn count_before(&self, t: f64) -> usize {
        self.events.partition_point(|e| e.time < t)
    }

    fn check_in_window(&self, t: f64, lo: f64) -> Result<()> {
        if !(t >= lo && t <= self.t_end) {
            return Err(Error::domain(format!(
                "t = {t} outside window [{lo}, {}]",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Parameters of the fractional Hawkes process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhpParams {
    pub lambda0: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
    pub c: f64,
}

impl FhpParams {
    pub fn new(lambda0: f64, alpha: f64, gamma: f64, beta: f64, c: f64) -> Self {
        FhpParams {
            lambda0,
            alpha,
            gamma,
            beta,
            c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda0 >= 0.0
            && self.lambda0.is_finite()
            && (0.0..=1.0).contains(&self.alpha)
            && self.gamma >= 0.0
            && self.gamma.is_finite()
            && self.beta > 0.0
            && self.beta <= 1.0
            && self.c > 0.0
            && self.c.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("FHP parameters out of range: {self:?}")))
        }
    }

    /// The composite scale `c^β`.
    pub fn c_beta(&self) -> f64 {
        self.c.powf(self.beta)
    }
}

/// Parameters of the ETAS model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtasParams {
    pub mu: f64,
    pub a: f64,
    pub delta: f64,
    pub c_e: f64,
    pub p: f64,
}

impl EtasParams {
    pub fn new(mu: f64, a: f64, delta: f64, c_e: f64, p: f64) -> Self {
        EtasParams {
            mu,
            a,
            delta,
            c_e,
            p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu >= 0.0
            && self.mu.is_finite()
            && self.a >= 0.0
            && self.a.is_finite()
            && self.delta >= 0.0
            && self.delta.is_finite()
            && self.c_e > 0.0
            && self.c_e.is_finite()
            && self.p > 0.0
            && self.p.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("ETAS parameters out of range: {self:?}")))
        }
    }
}

/// Which model a fit or diagnostic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Fhp,
    /// FHP with `λ₀ = 0`, conditioned on the first event.
    FhpRestricted,
    Etas,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fhp => "fhp",
            ModelKind::FhpRestricted => "fhp-restricted",
            ModelKind::Etas => "etas",
        }
    }

    /// Free parameters, in vector order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Fhp => &["lambda0", "alpha", "gamma", "beta", "c"],
            ModelKind::FhpRestricted => &["alpha", "gamma", "beta", "c"],
            ModelKind::Etas => &["mu", "A", "delta", "c_E", "p"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn is_fhp(self) -> bool {
        matches!(self, ModelKind::Fhp | ModelKind::FhpRestricted)
    }

    pub fn is_restricted(self) -> bool {
        self == ModelKind::FhpRestricted
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fhp" => Ok(ModelKind::Fhp),
            "fhp-restricted" => Ok(ModelKind::FhpRestricted),
            "etas" => Ok(ModelKind::Etas),
            other => Err(Error::Parse(format!("unknown model '{other}'"))),
        }
    }
}

/// Parameters of either model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Fhp(FhpParams),
    Etas(EtasParams),
}

impl ModelParams {
    /// Build from the free-parameter vector of `kind`.
    pub fn from_vec(kind: ModelKind, v: &[f64]) -> Result<Self> {
        if v.len() != kind.n_params() {
            return Err(Error::domain(format!(
                "{kind} expects {} parameters, got {}",
                kind.n_params(),
                v.len()
            )));
        }
        Ok(match kind {
            ModelKind::Fhp => ModelParams::Fhp(FhpParams::new(v[0], v[1], v[2], v[3], v[4])),
            ModelKind::FhpRestricted => {
                ModelParams::Fhp(FhpParams::new(0.0, v[0], v[1], v[2], v[3]))
            }
            ModelKind::Etas => ModelParams::Etas(EtasParams::new(v[0], v[1], v[2], v[3], v[4])),
        })
    }

    pub fn to_vec(&self, kind: ModelKind) -> Vec<f64> {
        match (self, kind) {
            (ModelParams::Fhp(p), ModelKind::FhpRestricted) => vec![p.alpha, p.gamma, p.beta, p.c],
            (ModelParams::Fhp(p), _) => vec![p.lambda0, p.alpha, p.gamma, p.beta, p.c],
            (ModelParams::Etas(p), _) => vec![p.mu, p.a, p.delta, p.c_e, p.p],
        }
    }

    pub fn fhp(&self) -> Option<&FhpParams> {
        match self {
            ModelParams::Fhp(p) => Some(p),
            ModelParams::Etas(_) => None,
        }
    }

    pub fn etas(&self) -> Option<&EtasParams> {
        match self {
            ModelParams::Etas(p) => Some(p),
            ModelParams::Fhp(_) => None,
        }
    }
}

/// Log-likelihood of `kind` at `params`.
pub fn loglik(kind: ModelKind, catalog: &Catalog, params: &ModelParams) -> Result<f64> {
    match (kind, params) {
        (ModelKind::Etas, ModelParams::Etas(p)) => etas_loglik(catalog, p),
        (ModelKind::Fhp, ModelParams::Fhp(p)) => fhp_loglik(catalog, p, false),
        (ModelKind::FhpRestricted, ModelParams::Fhp(p)) => fhp_loglik(catalog, p, true),
        _ => Err(Error::domain(format!("parameters do not match model {kind}"))),
    }
}

/// Compensator of `kind` at `t`, measured from the model's window start.
pub fn compensator(kind: ModelKind, t: f64, catalog: &Catalog, params: &ModelParams) -> Result<f64> {
    match (kind, params) {
        (ModelKind::Etas, ModelParams::Etas(p)) => etas_compensator(t, catalog, p),
        (ModelKind::Fhp, ModelParams::Fhp(p)) => fhp_compensator(t, catalog, p, false),
        (ModelKind::FhpRestricted, ModelParams::Fhp(p)) => fhp_compensator(t, catalog, p, true),
        _ => Err(Error::domain(format!("parameters do not match model {kind}"))),
    }
}
