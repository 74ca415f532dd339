use super::{Catalog, EtasParams};
use crate::error::{Error, Result};

/// `∫_0^Δ (1 + s/c_E)^{-p} ds`, continuous through `p = 1`.
fn omori_integral(dt: f64, c_e: f64, p: f64) -> f64 {
    let u = (dt / c_e).ln_1p();
    let q = 1.0 - p;
    if q == 0.0 {
        c_e * u
    } else {
        c_e * (q * u).exp_m1() / q
    }
}

/// ETAS conditional intensity as a left limit.
pub fn etas_intensity(t: f64, catalog: &Catalog, params: &EtasParams) -> Result<f64> {
    params.validate()?;
    catalog.check_in_window(t, catalog.t_start())?;
    let m0 = catalog.m0();
    let sum: f64 = catalog.events()[..catalog.count_before(t)]
        .iter()
        .map(|e| {
            (params.delta * (e.magnitude - m0)).exp()
                * (1.0 + (t - e.time) / params.c_e).powf(-params.p)
        })
        .sum();
    Ok(params.mu + params.a * sum)
}

/// ETAS compensator from `t_start` to `t`.
pub fn etas_compensator(t: f64, catalog: &Catalog, params: &EtasParams) -> Result<f64> {
    params.validate()?;
    catalog.check_in_window(t, catalog.t_start())?;
    Ok(compensator_unchecked(t, catalog, params))
}

fn compensator_unchecked(t: f64, catalog: &Catalog, params: &EtasParams) -> f64 {
    let m0 = catalog.m0();
    let mass: f64 = catalog.events()[..catalog.count_before(t)]
        .iter()
        .map(|e| (params.delta * (e.magnitude - m0)).exp() * omori_integral(t - e.time, params.c_e, params.p))
        .sum();
    params.mu * (t - catalog.t_start()) + params.a * mass
}

/// ETAS log-likelihood over `[t_start, t_end]`.
pub fn etas_loglik(catalog: &Catalog, params: &EtasParams) -> Result<f64> {
    params.validate()?;
    if catalog.is_empty() {
        return Err(Error::domain("likelihood needs at least one event"));
    }
    let events = catalog.events();
    let weights: Vec<f64> = catalog
        .excess()
        .iter()
        .map(|&m| (params.delta * m).exp())
        .collect();
    let inv_c = 1.0 / params.c_e;
    let mut log_sum = 0.0;
    for (i, ei) in events.iter().enumerate() {
        let s: f64 = (0..i)
            .map(|j| weights[j] * (-params.p * ((ei.time - events[j].time) * inv_c).ln_1p()).exp())
            .sum();
        let lam = params.mu + params.a * s;
        if !(lam > 0.0) {
            return Err(Error::Numerical(format!("intensity {lam} at event {i}")));
        }
        log_sum += lam.ln();
    }
    Ok(log_sum - compensator_unchecked(catalog.t_end(), catalog, params))
}
