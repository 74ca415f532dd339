//! Nelder–Mead simplex minimizer with standard coefficients.

/// Stopping rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmOptions {
    /// Spread of objective values across the simplex, relative to `1 + |f_best|`.
    pub ftol: f64,
    /// Largest distance of any vertex from the best one.
    pub xtol: f64,
    pub max_iter: usize,
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            ftol: 1e-8,
            xtol: 1e-6,
            max_iter: 5000,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`. `clamp` maps any trial point back into the
/// admissible region and is applied before every evaluation.
pub fn minimize<F, C>(mut f: F, x0: &[f64], clamp: C, opts: &NmOptions) -> NmResult
where
    F: FnMut(&[f64]) -> f64,
    C: Fn(&mut [f64]),
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &mut Vec<f64>| {
        clamp(x);
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut v0 = x0.to_vec();
    values.push(eval(&mut v0));
    simplex.push(v0);
    for i in 0..n {
        let mut v = simplex[0].clone();
        v[i] += opts.initial_step;
        let mut fv = eval(&mut v);
        if v[i] == simplex[0][i] {
            // The clamp swallowed the step; go the other way.
            v = simplex[0].clone();
            v[i] -= opts.initial_step;
            fv = eval(&mut v);
        }
        simplex.push(v);
        values.push(fv);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second = order[n - 1];

        let f_spread = values[worst] - values[best];
        let size = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if values[best].is_finite() && f_spread <= opts.ftol * (1.0 + values[best].abs()) && size <= opts.xtol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &k in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[k]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(1.0);
        let fr = eval(&mut xr);
        if fr < values[best] {
            let mut xe = along(2.0);
            let fe = eval(&mut xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (mut xc, fc) = if fr < values[worst] {
            let mut x = along(0.5);
            let v = eval(&mut x);
            (x, v)
        } else {
            let mut x = along(-0.5);
            let v = eval(&mut x);
            (x, v)
        };
        if fc < values[worst].min(fr) {
            std::mem::swap(&mut simplex[worst], &mut xc);
            values[worst] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let anchor = simplex[best].clone();
        for &k in &order[1..] {
            let mut v: Vec<f64> = simplex[k]
                .iter()
                .zip(&anchor)
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[k] = eval(&mut v);
            simplex[k] = v;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    NmResult {
        x: simplex[best].clone(),
        f: values[best],
        iterations,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = minimize(f, &[-1.2, 1.0], |_| {}, &NmOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
    }

    #[test]
    fn respects_clamp() {
        let f = |x: &[f64]| (x[0] + 3.0).powi(2) + (x[1] - 1.0).powi(2);
        let clamp = |x: &mut [f64]| x[0] = x[0].max(0.0);
        let r = minimize(f, &[2.0, 0.0], clamp, &NmOptions::default());
        assert!(r.converged);
        assert!(r.x[0] == 0.0 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |x: &[f64]| if x[0] < 0.5 { f64::INFINITY } else { (x[0] - 1.0).powi(2) };
        let r = minimize(f, &[3.0], |_| {}, &NmOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn iteration_cap() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = NmOptions {
            max_iter: 3,
            ..NmOptions::default()
        };
        let r = minimize(f, &[5.0, 5.0, 5.0], |_| {}, &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }
}
