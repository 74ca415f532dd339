//! Multi-start maximum likelihood, Hessians, confidence intervals and AIC.
//!
//! Optimization runs in working coordinates: `log` for parameters bounded
//! below by zero and `logit` for those in `[0, 1]`. Working coordinates are
//! clamped to a finite box, so a run that drifts to a boundary stops there
//! and the reported parameters always satisfy the natural constraints.

mod hessian;
pub mod nelder_mead;
mod record;

use nalgebra::DMatrix;
use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result, StartDiagnostic};
use crate::model::{etas_loglik, Catalog, FhpLikelihood, ModelKind, ModelParams};
use crate::rng;

pub use hessian::{default_steps, fd_hessian};
pub use nelder_mead::{NmOptions, NmResult};
pub use record::{FitRecord, RECORD_FORMAT};

const WORK_MIN: f64 = -25.0;
const LOG_MAX: f64 = 15.0;
const LOGIT_MAX: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Link {
    Log,
    Logit,
}

fn links(kind: ModelKind) -> &'static [Link] {
    use Link::*;
    match kind {
        ModelKind::Fhp => &[Log, Logit, Log, Logit, Log],
        ModelKind::FhpRestricted => &[Logit, Log, Logit, Log],
        ModelKind::Etas => &[Log, Log, Log, Log, Log],
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Natural parameters from working coordinates.
pub fn to_natural(kind: ModelKind, z: &[f64]) -> Vec<f64> {
    links(kind)
        .iter()
        .zip(z)
        .map(|(l, &v)| match l {
            Link::Log => v.exp(),
            Link::Logit => logistic(v),
        })
        .collect()
}

/// Working coordinates from natural parameters, clamped to the working box.
pub fn to_working(kind: ModelKind, theta: &[f64]) -> Vec<f64> {
    let mut z: Vec<f64> = links(kind)
        .iter()
        .zip(theta)
        .map(|(l, &v)| match l {
            Link::Log => v.ln(),
            Link::Logit => (v / (1.0 - v)).ln(),
        })
        .collect();
    clamp_working(kind, &mut z);
    z
}

fn clamp_working(kind: ModelKind, z: &mut [f64]) {
    for (l, v) in links(kind).iter().zip(z.iter_mut()) {
        let hi = match l {
            Link::Log => LOG_MAX,
            Link::Logit => LOGIT_MAX,
        };
        *v = if v.is_nan() { 0.0 } else { v.clamp(WORK_MIN, hi) };
    }
}

fn at_clamp(kind: ModelKind, z: &[f64]) -> bool {
    links(kind).iter().zip(z).any(|(l, &v)| {
        let hi = match l {
            Link::Log => LOG_MAX,
            Link::Logit => LOGIT_MAX,
        };
        v <= WORK_MIN || v >= hi
    })
}

/// Natural-space box `(lower, upper)` used by the Hessian stencils.
fn natural_box(kind: ModelKind) -> (Vec<f64>, Vec<f64>) {
    links(kind)
        .iter()
        .map(|l| match l {
            Link::Log => (0.0, f64::INFINITY),
            Link::Logit => (0.0, 1.0),
        })
        .unzip()
}

enum Inner<'a> {
    Fhp(FhpLikelihood),
    Etas(&'a Catalog),
}

/// Negative log-likelihood of one model on one catalog, as a function of the
/// natural parameter vector. Invalid points evaluate to `+∞`.
pub struct Objective<'a> {
    kind: ModelKind,
    inner: Inner<'a>,
}

impl<'a> Objective<'a> {
    pub fn new(kind: ModelKind, catalog: &'a Catalog) -> Result<Self> {
        let inner = match kind {
            ModelKind::Etas => {
                if catalog.is_empty() {
                    return Err(Error::domain("cannot fit an empty catalog"));
                }
                Inner::Etas(catalog)
            }
            _ => Inner::Fhp(FhpLikelihood::new(catalog, kind.is_restricted())?),
        };
        Ok(Objective { kind, inner })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn neg_loglik(&self, theta: &[f64]) -> f64 {
        let Ok(params) = ModelParams::from_vec(self.kind, theta) else {
            return f64::INFINITY;
        };
        let ll = match (&self.inner, &params) {
            (Inner::Fhp(l), ModelParams::Fhp(p)) => l.eval(p),
            (Inner::Etas(c), ModelParams::Etas(p)) => etas_loglik(c, p),
            _ => return f64::INFINITY,
        };
        match ll {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub nm: NmOptions,
    /// Run starts on the rayon pool. Results do not depend on this.
    pub parallel: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            n_starts: 30,
            seed: 0,
            nm: NmOptions::default(),
            parallel: true,
        }
    }
}

/// A closed interval for one parameter.
pub type Interval = (f64, f64);

/// Maximum likelihood estimate with its curvature and intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: ModelKind,
    pub label: String,
    pub n_events: usize,
    pub params: ModelParams,
    pub neg_loglik: f64,
    pub aic: f64,
    /// Number of free parameters.
    pub k: usize,
    /// Hessian of `-ℓ` in natural coordinates.
    pub hessian: DMatrix<f64>,
    pub hessian_pd: bool,
    /// A stencil touched a box boundary; intervals are then unreliable.
    pub boundary: bool,
    pub ci95: Option<Vec<Interval>>,
    pub ci99: Option<Vec<Interval>>,
    pub n_starts: usize,
    pub n_converged: usize,
    pub n_excluded: usize,
    pub converged: bool,
    pub start_index: usize,
    pub start_used: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    pub starts: Vec<StartDiagnostic>,
}

impl FitResult {
    pub fn theta(&self) -> Vec<f64> {
        self.params.to_vec(self.model)
    }

    pub fn intervals(&self, level: f64) -> Option<&[Interval]> {
        if level == 0.95 {
            self.ci95.as_deref()
        } else if level == 0.99 {
            self.ci99.as_deref()
        } else {
            None
        }
    }
}

pub fn aic(neg_loglik: f64, k: usize) -> f64 {
    2.0 * neg_loglik + 2.0 * k as f64
}

struct Run {
    diag: StartDiagnostic,
    theta: Vec<f64>,
    excluded: bool,
}

fn run_start(obj: &Objective<'_>, index: usize, opts: &FitOptions) -> Run {
    let kind = obj.kind();
    let mut rng = rng::stream(opts.seed, index as u64);
    let start: Vec<f64> = (0..kind.n_params())
        .map(|_| rng.sample::<f64, _>(Open01))
        .collect();
    let initial = obj.neg_loglik(&start);
    let z0 = to_working(kind, &start);
    let res = nelder_mead::minimize(
        |z| obj.neg_loglik(&to_natural(kind, z)),
        &z0,
        |z| clamp_working(kind, z),
        &opts.nm,
    );
    let theta = to_natural(kind, &res.x);
    let stuck = !res.converged && at_clamp(kind, &res.x);
    let (excluded, reason) = if !res.f.is_finite() {
        (true, "non-finite objective")
    } else if stuck {
        (true, "stalled at a boundary")
    } else if !res.converged {
        (false, "iteration limit")
    } else {
        (false, "converged")
    };
    Run {
        diag: StartDiagnostic {
            index,
            start,
            initial,
            objective: res.f,
            converged: res.converged,
            iterations: res.iterations,
            reason: reason.to_string(),
        },
        theta,
        excluded,
    }
}

/// Multi-start fit. The best converged, non-excluded run wins, ties broken by
/// start index; the outcome is bit-identical for a given seed.
pub fn fit(kind: ModelKind, catalog: &Catalog, opts: &FitOptions) -> Result<FitResult> {
    if opts.n_starts == 0 {
        return Err(Error::domain("n_starts must be positive"));
    }
    let obj = Objective::new(kind, catalog)?;
    let runs: Vec<Run> = if opts.parallel {
        (0..opts.n_starts)
            .into_par_iter()
            .map(|i| run_start(&obj, i, opts))
            .collect()
    } else {
        (0..opts.n_starts).map(|i| run_start(&obj, i, opts)).collect()
    };

    let best = runs
        .iter()
        .filter(|r| r.diag.converged && !r.excluded)
        .min_by(|a, b| {
            a.diag
                .objective
                .total_cmp(&b.diag.objective)
                .then(a.diag.index.cmp(&b.diag.index))
        });
    let Some(best) = best else {
        return Err(Error::Estimation {
            starts: runs.into_iter().map(|r| r.diag).collect(),
        });
    };

    let theta = best.theta.clone();
    let neg_loglik = obj.neg_loglik(&theta);
    let k = kind.n_params();
    let (hessian, boundary) = hessian_of(&obj, &theta);
    let cis = [0.95, 0.99].map(|lvl| intervals_from(kind, &theta, &hessian, lvl).ok());
    let hessian_pd = hessian.clone().cholesky().is_some();

    Ok(FitResult {
        model: kind,
        label: catalog.label().to_string(),
        n_events: catalog.len(),
        params: ModelParams::from_vec(kind, &theta)?,
        neg_loglik,
        aic: aic(neg_loglik, k),
        k,
        hessian,
        hessian_pd,
        boundary,
        ci95: cis[0].clone(),
        ci99: cis[1].clone(),
        n_starts: opts.n_starts,
        n_converged: runs.iter().filter(|r| r.diag.converged).count(),
        n_excluded: runs.iter().filter(|r| r.excluded).count(),
        converged: true,
        start_index: best.diag.index,
        start_used: best.diag.start.clone(),
        iterations: best.diag.iterations,
        seed: opts.seed,
        starts: runs.iter().map(|r| r.diag.clone()).collect(),
    })
}

fn hessian_of(obj: &Objective<'_>, theta: &[f64]) -> (DMatrix<f64>, bool) {
    let (lo, hi) = natural_box(obj.kind());
    fd_hessian(|x| obj.neg_loglik(x), theta, &default_steps(theta), &lo, &hi)
}

/// Hessian of `-ℓ` at `params` and whether a boundary stencil was used.
pub fn hessian(kind: ModelKind, catalog: &Catalog, params: &ModelParams) -> Result<(DMatrix<f64>, bool)> {
    let obj = Objective::new(kind, catalog)?;
    Ok(hessian_of(&obj, &params.to_vec(kind)))
}

fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level {level} not in (0, 1)")));
    }
    let n = Normal::new(0.0, 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(n.inverse_cdf(0.5 + level / 2.0))
}

/// `θ ± z sqrt(diag H⁻¹)` without clipping.
pub fn wald_intervals(theta: &[f64], hessian: &DMatrix<f64>, level: f64) -> Result<Vec<Interval>> {
    let z = normal_quantile(level)?;
    let k = theta.len();
    if hessian.nrows() != k || hessian.ncols() != k {
        return Err(Error::domain("Hessian shape does not match parameters"));
    }
    let eig = hessian.clone().symmetric_eigen();
    let (min_ev, max_ev) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let chol = hessian.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "Hessian not positive definite (eigenvalues in [{min_ev:e}, {max_ev:e}])"
        ))
    })?;
    let inv = chol.inverse();
    (0..k)
        .map(|j| {
            let var = inv[(j, j)];
            if !(var.is_finite() && var > 0.0) {
                return Err(Error::Numerical(format!(
                    "variance {var} for parameter {j} (condition number {:e})",
                    max_ev / min_ev
                )));
            }
            let half = z * var.sqrt();
            Ok((theta[j] - half, theta[j] + half))
        })
        .collect()
}

fn intervals_from(kind: ModelKind, theta: &[f64], h: &DMatrix<f64>, level: f64) -> Result<Vec<Interval>> {
    let (lo, hi) = natural_box(kind);
    Ok(wald_intervals(theta, h, level)?
        .into_iter()
        .enumerate()
        .map(|(j, (a, b))| (a.max(lo[j]), b.min(hi[j])))
        .collect())
}

/// Asymptotic intervals at `level`, clipped to the parameter box.
pub fn confidence_intervals(fit: &FitResult, level: f64) -> Result<Vec<Interval>> {
    intervals_from(fit.model, &fit.theta(), &fit.hessian, level)
}

/// Range of `c^β` over the corners of the marginal intervals for `c` and `β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CBetaExtremes {
    pub point: f64,
    pub min: f64,
    pub max: f64,
}

pub fn c_beta_from_intervals(c_hat: f64, beta_hat: f64, c_ci: Interval, beta_ci: Interval) -> CBetaExtremes {
    let corners = [
        c_ci.0.powf(beta_ci.0),
        c_ci.0.powf(beta_ci.1),
        c_ci.1.powf(beta_ci.0),
        c_ci.1.powf(beta_ci.1),
    ];
    CBetaExtremes {
        point: c_hat.powf(beta_hat),
        min: corners.iter().copied().fold(f64::INFINITY, f64::min),
        max: corners.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn c_beta_extremes(fit: &FitResult, level: f64) -> Result<CBetaExtremes> {
    let Some(p) = fit.params.fhp() else {
        return Err(Error::domain("c^β is defined for FHP fits only"));
    };
    let ci = confidence_intervals(fit, level)?;
    let (bi, ci_idx) = if fit.model.is_restricted() { (2, 3) } else { (3, 4) };
    Ok(c_beta_from_intervals(p.c, p.beta, ci[ci_idx], ci[bi]))
}

/// One model's score for comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct AicEntry {
    pub label: String,
    pub neg_loglik: f64,
    pub k: usize,
    pub aic: f64,
}

impl AicEntry {
    pub fn new(label: impl Into<String>, neg_loglik: f64, k: usize) -> Self {
        AicEntry {
            label: label.into(),
            neg_loglik,
            k,
            aic: aic(neg_loglik, k),
        }
    }
}

impl From<&FitResult> for AicEntry {
    fn from(f: &FitResult) -> Self {
        AicEntry {
            label: format!("{}:{}", f.label, f.model),
            neg_loglik: f.neg_loglik,
            k: f.k,
            aic: f.aic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AicDelta {
    pub first: String,
    pub second: String,
    /// `AIC(first) - AIC(second)`.
    pub delta: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AicComparison {
    /// Entries by ascending AIC.
    pub ranking: Vec<AicEntry>,
    /// All pairs in input order.
    pub deltas: Vec<AicDelta>,
}

/// Threshold on `|ΔAIC|` treated as significant.
pub const AIC_SIGNIFICANCE: f64 = 2.0;

pub fn compare_aic(entries: &[AicEntry]) -> AicComparison {
    let mut ranking = entries.to_vec();
    ranking.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    let mut deltas = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let delta = entries[i].aic - entries[j].aic;
            deltas.push(AicDelta {
                first: entries[i].label.clone(),
                second: entries[j].label.clone(),
                delta,
                significant: delta.abs() >= AIC_SIGNIFICANCE,
            });
        }
    }
    AicComparison { ranking, deltas }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Event;

    #[test]
    fn links_round_trip_and_stay_in_box() {
        let theta = [0.7, 0.3, 1.4, 0.65, 2.5];
        let z = to_working(ModelKind::Fhp, &theta);
        for (a, b) in to_natural(ModelKind::Fhp, &z).iter().zip(&theta) {
            assert!((a - b).abs() < 1e-14);
        }
        let wild = to_natural(ModelKind::Fhp, &[-1e3, 1e3, 40.0, 1e3, -40.0]);
        assert!(ModelParams::from_vec(ModelKind::Fhp, &wild).unwrap().fhp().unwrap().validate().is_ok());
        let mut z = vec![f64::NAN, 1e9, -1e9, 3.0, 0.0];
        clamp_working(ModelKind::Fhp, &mut z);
        assert!(z.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn identity_hessian_intervals() {
        let h = DMatrix::<f64>::identity(2, 2);
        let ci = wald_intervals(&[0.0, 0.0], &h, 0.95).unwrap();
        assert!((ci[0].1 - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((ci[1].0 + 1.959_963_984_540_054).abs() < 1e-9);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(wald_intervals(&[0.0, 0.0], &bad, 0.95).is_err());
    }

    #[test]
    fn c_beta_corners() {
        let e = c_beta_from_intervals(1.0, 0.7, (0.8, 1.2), (0.6, 0.8));
        assert!((e.min - 0.8f64.powf(0.8)).abs() < 1e-15);
        assert!((e.max - 1.2f64.powf(0.8)).abs() < 1e-15);
        assert_eq!(e.point, 1.0);
        let one = c_beta_from_intervals(1.0, 0.5, (1.0, 1.0), (0.2, 0.9));
        assert_eq!((one.min, one.max), (1.0, 1.0));
    }

    #[test]
    fn aic_arithmetic() {
        let a = AicEntry::new("a", 100.0, 5);
        let b = AicEntry::new("b", 101.0, 5);
        let cmp = compare_aic(&[b.clone(), a.clone()]);
        assert_eq!(cmp.ranking[0].label, "a");
        assert_eq!(cmp.deltas[0].delta, 2.0);
        assert!(cmp.deltas[0].significant);
        assert_eq!(a.aic - 2.0 * 5.0 + 2.0 * -a.neg_loglik, 0.0);
        let same = compare_aic(&[a.clone(), a]);
        assert_eq!(same.deltas[0].delta, 0.0);
        assert!(!same.deltas[0].significant);
    }

    #[test]
    fn poisson_fit_and_information() {
        // Evenly spread events: λ̂₀ = N/T, α̂ at its lower boundary.
        let n = 60;
        let ev: Vec<Event> = (0..n).map(|i| Event::new(i as f64 * 1.7 + 0.3, 3.0)).collect();
        let cat = Catalog::new(ev, 2.5, 0.0, 102.0, "poisson").unwrap();
        let opts = FitOptions {
            n_starts: 4,
            seed: 11,
            ..FitOptions::default()
        };
        let f = fit(ModelKind::Fhp, &cat, &opts).unwrap();
        let p = f.params.fhp().unwrap();
        let rate = n as f64 / 102.0;
        assert!((p.lambda0 - rate).abs() < 1e-3 * rate, "{p:?}");
        assert!(p.alpha < 1e-3, "{p:?}");
        assert_eq!(f.aic, aic(f.neg_loglik, 5));
        assert!(f.boundary);
        for s in &f.starts {
            assert!(f.neg_loglik <= s.initial);
        }
        // d²(-ℓ)/dλ₀² = N/λ₀² for the pure Poisson likelihood.
        let obj = Objective::new(ModelKind::Fhp, &cat).unwrap();
        let (h, _) = fd_hessian(
            |x| obj.neg_loglik(&[x[0], 0.0, 1.0, 0.5, 1.0]),
            &[rate],
            &[1e-4],
            &[0.0],
            &[f64::INFINITY],
        );
        let want = n as f64 / (rate * rate);
        assert!((h[(0, 0)] - want).abs() < 1e-4 * want);
        let ci = wald_intervals(&[rate], &h, 0.95).unwrap()[0];
        let half = 1.959_963_984_540_054 * rate / (n as f64).sqrt();
        assert!(((ci.1 - ci.0) / 2.0 - half).abs() < 1e-4 * half);
    }

    #[test]
    fn seeded_fits_are_identical() {
        let ev: Vec<Event> = [0.0, 0.05, 0.2, 1.5, 1.52, 3.0, 4.4, 4.41, 4.5, 7.0]
            .iter()
            .zip([4.0, 2.6, 3.1, 3.5, 2.5, 2.7, 4.2, 2.9, 2.6, 3.0])
            .map(|(&t, m)| Event::new(t, m))
            .collect();
        let cat = Catalog::from_events(ev, 2.5, "tiny").unwrap();
        let mut opts = FitOptions {
            n_starts: 3,
            seed: 5,
            ..FitOptions::default()
        };
        let a = fit(ModelKind::Etas, &cat, &opts).unwrap();
        opts.parallel = false;
        let b = fit(ModelKind::Etas, &cat, &opts).unwrap();
        assert_eq!(a, b);
    }
}
