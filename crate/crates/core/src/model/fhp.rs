use super::{Catalog, FhpParams};
use crate::error::{Error, Result};
use crate::mlf::{LogTable, MlKernel};

fn window_start(catalog: &Catalog, restricted: bool) -> f64 {
    match (restricted, catalog.events().first()) {
        (true, Some(first)) => first.time,
        _ => catalog.t_start(),
    }
}

/// Conditional intensity `λ(t)` as a left limit.
///
/// In restricted mode the background term is dropped and the window starts
/// at the first event.
pub fn fhp_intensity(t: f64, catalog: &Catalog, params: &FhpParams, restricted: bool) -> Result<f64> {
    params.validate()?;
    catalog.check_in_window(t, window_start(catalog, restricted))?;
    let kernel = MlKernel::new(params.beta, params.c)?;
    let base = if restricted { 0.0 } else { params.lambda0 };
    let m0 = catalog.m0();
    let sum: f64 = catalog.events()[..catalog.count_before(t)]
        .iter()
        .map(|e| (params.gamma * (e.magnitude - m0)).exp() * kernel.density_unchecked(t - e.time))
        .sum();
    Ok(base + params.alpha * sum)
}

/// Compensator `Λ(t) = ∫ λ` from the window start to `t`.
pub fn fhp_compensator(t: f64, catalog: &Catalog, params: &FhpParams, restricted: bool) -> Result<f64> {
    params.validate()?;
    let start = window_start(catalog, restricted);
    catalog.check_in_window(t, start)?;
    let kernel = MlKernel::new(params.beta, params.c)?;
    Ok(compensator_with(&kernel, t, start, catalog, params, restricted))
}

fn compensator_with(
    kernel: &MlKernel,
    t: f64,
    start: f64,
    catalog: &Catalog,
    params: &FhpParams,
    restricted: bool,
) -> f64 {
    let base = if restricted { 0.0 } else { params.lambda0 };
    let m0 = catalog.m0();
    let mass: f64 = catalog.events()[..catalog.count_before(t)]
        .iter()
        .map(|e| {
            (params.gamma * (e.magnitude - m0)).exp() * (1.0 - kernel.survival_unchecked(t - e.time))
        })
        .sum();
    base * (t - start) + params.alpha * mass
}

fn window_end(catalog: &Catalog, restricted: bool) -> f64 {
    match (restricted, catalog.events().last()) {
        (true, Some(last)) => last.time,
        _ => catalog.t_end(),
    }
}

fn check_size(catalog: &Catalog, restricted: bool) -> Result<()> {
    let need = if restricted { 2 } else { 1 };
    if catalog.len() < need {
        return Err(Error::domain(format!(
            "{} likelihood needs at least {need} events",
            if restricted { "restricted" } else { "full" }
        )));
    }
    Ok(())
}

/// Log-likelihood `Σ log λ(t_i) - Λ(T)`.
///
/// Restricted mode sums over events 2..N on the window `[t_1, t_N]`.
/// A zero intensity at an event is a numerical error.
pub fn fhp_loglik(catalog: &Catalog, params: &FhpParams, restricted: bool) -> Result<f64> {
    params.validate()?;
    check_size(catalog, restricted)?;
    let kernel = MlKernel::new(params.beta, params.c)?;
    let base = if restricted { 0.0 } else { params.lambda0 };
    let events = catalog.events();
    let weights: Vec<f64> = catalog
        .excess()
        .iter()
        .map(|&m| (params.gamma * m).exp())
        .collect();
    let first = usize::from(restricted);
    let mut log_sum = 0.0;
    for i in first..events.len() {
        let ti = events[i].time;
        let s: f64 = (0..i)
            .map(|j| weights[j] * kernel.density_unchecked(ti - events[j].time))
            .sum();
        let lam = base + params.alpha * s;
        if !(lam > 0.0) {
            return Err(Error::Numerical(format!("intensity {lam} at event {i}")));
        }
        log_sum += lam.ln();
    }
    let start = window_start(catalog, restricted);
    let end = window_end(catalog, restricted);
    Ok(log_sum - compensator_with(&kernel, end, start, catalog, params, restricted))
}

/// Log-likelihood evaluator for repeated calls on one catalog.
///
/// Pairwise `ln(t_i - t_j)` and `1/(t_i - t_j)` are cached and the kernel is
/// read from a [`LogTable`] built per call, so a pair costs one table lookup.
/// Memory is `N(N-1)` doubles.
#[derive(Debug, Clone)]
pub struct FhpLikelihood {
    restricted: bool,
    times: Vec<f64>,
    excess: Vec<f64>,
    log_dt: Vec<f64>,
    inv_dt: Vec<f64>,
    start: f64,
    end: f64,
}

impl FhpLikelihood {
    pub fn new(catalog: &Catalog, restricted: bool) -> Result<Self> {
        check_size(catalog, restricted)?;
        let times = catalog.times();
        let n = times.len();
        let mut log_dt = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        let mut inv_dt = Vec::with_capacity(log_dt.capacity());
        for i in 0..n {
            for j in 0..i {
                let dt = times[i] - times[j];
                log_dt.push(dt.ln());
                inv_dt.push(1.0 / dt);
            }
        }
        Ok(FhpLikelihood {
            restricted,
            excess: catalog.excess(),
            log_dt,
            inv_dt,
            start: window_start(catalog, restricted),
            end: window_end(catalog, restricted),
            times,
        })
    }

    pub fn restricted(&self) -> bool {
        self.restricted
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn eval(&self, params: &FhpParams) -> Result<f64> {
        params.validate()?;
        let kernel = MlKernel::new(params.beta, params.c)?;
        let table = LogTable::new(kernel.density_plan());
        let beta = params.beta;
        let ln_c = params.c.ln();
        let base = if self.restricted { 0.0 } else { params.lambda0 };
        let weights: Vec<f64> = self.excess.iter().map(|&m| (params.gamma * m).exp()).collect();

        let mut log_sum = 0.0;
        let first = usize::from(self.restricted);
        for i in first..self.times.len() {
            let off = i * i.saturating_sub(1) / 2;
            let row = &self.log_dt[off..off + i];
            let inv = &self.inv_dt[off..off + i];
            let mut s = 0.0;
            for j in 0..i {
                // c f_β(cΔ) = x E_{β,β}(-x) / Δ with x = (cΔ)^β
                s += weights[j] * inv[j] * table.eval(beta * (ln_c + row[j]));
            }
            let lam = base + params.alpha * s;
            if !(lam > 0.0) {
                return Err(Error::Numerical(format!("intensity {lam} at event {i}")));
            }
            log_sum += lam.ln();
        }

        let mut mass = 0.0;
        for (k, &tj) in self.times.iter().enumerate() {
            if tj >= self.end {
                break;
            }
            mass += weights[k] * (1.0 - kernel.survival_unchecked(self.end - tj));
        }
        Ok(log_sum - base * (self.end - self.start) - params.alpha * mass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlf::ml_kernel;
    use crate::model::Event;

    fn catalog() -> Catalog {
        let ev = [(0.0, 4.1), (0.4, 2.6), (0.45, 3.0), (2.0, 2.5), (5.5, 3.7), (5.6, 2.9)];
        Catalog::new(
            ev.iter().map(|&(t, m)| Event::new(t, m)).collect(),
            2.5,
            0.0,
            6.0,
            "t",
        )
        .unwrap()
    }

    #[test]
    fn empty_history_intensity_is_background() {
        let c = Catalog::new(vec![], 2.5, 0.0, 10.0, "e").unwrap();
        let p = FhpParams::new(1.0, 0.3, 1.0, 0.6, 2.0);
        assert_eq!(fhp_intensity(5.0, &c, &p, false).unwrap(), 1.0);
        assert_eq!(fhp_compensator(7.0, &c, &p, false).unwrap(), 7.0);
        assert!(fhp_intensity(11.0, &c, &p, false).is_err());
    }

    #[test]
    fn single_event_intensity() {
        let c = Catalog::new(vec![Event::new(1.0, 3.5)], 2.5, 0.0, 5.0, "one").unwrap();
        let p = FhpParams::new(0.5, 0.4, 1.2, 0.7, 2.0);
        let got = fhp_intensity(1.3, &c, &p, false).unwrap();
        let want = 0.5 + 0.4 * 1.2f64.exp() * ml_kernel(0.3, 0.7, 2.0).unwrap();
        assert!((got - want).abs() < 1e-14 * want);
        // Left limit: the event itself does not count at its own time.
        assert_eq!(fhp_intensity(1.0, &c, &p, false).unwrap(), 0.5);
    }

    #[test]
    fn poisson_loglik() {
        let ev = vec![Event::new(1.0, 3.0), Event::new(2.0, 3.0), Event::new(3.0, 3.0)];
        let c = Catalog::new(ev, 2.5, 0.0, 4.0, "p").unwrap();
        let p = FhpParams::new(2.0, 0.0, 1.0, 0.5, 1.0);
        let got = fhp_loglik(&c, &p, false).unwrap();
        assert!((got - (3.0 * 2f64.ln() - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn cached_matches_direct() {
        let c = catalog();
        for &(p, r) in &[
            (FhpParams::new(0.7, 0.4, 1.1, 0.6, 1.7), false),
            (FhpParams::new(0.0, 0.5, 0.8, 0.85, 0.3), true),
            (FhpParams::new(0.2, 0.9, 0.0, 1.0, 4.0), false),
        ] {
            let direct = fhp_loglik(&c, &p, r).unwrap();
            let cached = FhpLikelihood::new(&c, r).unwrap().eval(&p).unwrap();
            assert!((direct - cached).abs() < 1e-11 * direct.abs(), "{direct} {cached}");
        }
    }

    #[test]
    fn restricted_needs_two_events() {
        let c = Catalog::from_events(vec![Event::new(0.0, 3.0)], 2.5, "one").unwrap();
        let p = FhpParams::new(0.0, 0.5, 1.0, 0.5, 1.0);
        assert!(fhp_loglik(&c, &p, true).is_err());
        assert!(FhpLikelihood::new(&c, true).is_err());
        // λ(t_1) = 0 in the full model without background.
        assert!(matches!(fhp_loglik(&c, &p, false), Err(Error::Numerical(_))));
    }

    #[test]
    fn total_mass_of_one_event() {
        let c = Catalog::new(vec![Event::new(0.0, 2.5)], 2.5, 0.0, 1e12, "m").unwrap();
        let p = FhpParams::new(0.0, 1.0, 0.0, 0.9, 1.0);
        let m = fhp_compensator(1e12, &c, &p, false).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "{m}");
    }
}
