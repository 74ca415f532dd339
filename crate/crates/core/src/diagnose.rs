//! Residual analysis by time rescaling.
//!
//! Under a correct model the compensator evaluated at the event times is a
//! unit-rate Poisson process, so its increments are Exp(1) and
//! `U_k = 1 - exp(-X_k)` is uniform.

use std::fmt::Write as _;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::model::{compensator, Catalog, ModelKind, ModelParams};

/// Asymptotic 95% Kolmogorov–Smirnov critical constant.
pub const KS_95: f64 = 1.3581;
/// Asymptotic 99% Kolmogorov–Smirnov critical constant.
pub const KS_99: f64 = 1.6276;

/// Asymptotic KS constant for a test at `level` (0.05 or 0.01).
pub fn ks_constant(level: f64) -> Result<f64> {
    if level == 0.05 {
        Ok(KS_95)
    } else if level == 0.01 {
        Ok(KS_99)
    } else {
        Err(Error::domain(format!("no KS constant for level {level}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    /// Transformed times `τ_i`, in expected-count units.
    pub taus: Vec<f64>,
    /// `X_k = τ_k - τ_{k-1}` with `τ_0 = 0`.
    pub increments: Vec<f64>,
    /// `U_k = 1 - exp(-X_k)`.
    pub uniforms: Vec<f64>,
    /// `1.3581 √n`.
    pub ks_band_95: f64,
    pub n: usize,
}

impl ResidualSeries {
    /// Build from transformed times (must be finite and non-decreasing).
    pub fn from_taus(taus: Vec<f64>) -> Result<Self> {
        let mut prev = 0.0;
        let mut increments = Vec::with_capacity(taus.len());
        for (i, &t) in taus.iter().enumerate() {
            if !(t.is_finite() && t >= prev) {
                return Err(Error::Numerical(format!(
                    "transformed time {i} = {t} does not follow {prev}"
                )));
            }
            increments.push(t - prev);
            prev = t;
        }
        let uniforms = increments.iter().map(|&x: &f64| -(-x).exp_m1()).collect();
        let n = taus.len();
        Ok(ResidualSeries {
            taus,
            increments,
            uniforms,
            ks_band_95: KS_95 * (n as f64).sqrt(),
            n,
        })
    }

    pub fn mean_increment(&self) -> f64 {
        self.increments.iter().sum::<f64>() / self.n as f64
    }

    /// Largest `|τ_i - i|`.
    pub fn max_deviation(&self) -> f64 {
        self.taus
            .iter()
            .enumerate()
            .map(|(i, t)| (t - (i + 1) as f64).abs())
            .fold(0.0, f64::max)
    }

    /// Whether `τ_i - i` stays inside `±1.3581 √n` throughout.
    pub fn within_band(&self) -> bool {
        self.max_deviation() <= self.ks_band_95
    }
}

/// Transformed times of the events in the model's likelihood window.
///
/// The full models use every event with `τ` measured from the window start.
/// The restricted model conditions on the first event: it yields `N - 1`
/// residuals for events `2..N`, measured from `t_1`.
pub fn residuals(catalog: &Catalog, kind: ModelKind, params: &ModelParams) -> Result<ResidualSeries> {
    let skip = usize::from(kind.is_restricted());
    if catalog.len() <= skip {
        return Err(Error::domain(format!(
            "{kind} residuals need more than {skip} events"
        )));
    }
    let taus = catalog.events()[skip..]
        .iter()
        .map(|e| compensator(kind, e.time, catalog, params))
        .collect::<Result<Vec<_>>>()?;
    ResidualSeries::from_taus(taus)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub i: usize,
    /// `τ_i - i`.
    pub residual: f64,
    pub upper: f64,
    pub lower: f64,
}

/// Mean-removed transformed-time sequence with its 95% KS band.
pub fn transformed_time_plotdata(res: &ResidualSeries) -> Vec<PlotRow> {
    res.taus
        .iter()
        .enumerate()
        .map(|(k, &t)| PlotRow {
            i: k + 1,
            residual: t - (k + 1) as f64,
            upper: res.ks_band_95,
            lower: -res.ks_band_95,
        })
        .collect()
}

/// CSV `i,tau_minus_i,upper,lower`.
pub fn plotdata_table(rows: &[PlotRow]) -> String {
    let mut out = String::from("i,tau_minus_i,upper,lower\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.i, r.residual, r.upper, r.lower);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerialPairs {
    /// `(U_k, U_{k+1})` for every consecutive pair.
    pub pairs: Vec<(f64, f64)>,
    /// Pearson correlation of the pairs.
    pub correlation: f64,
    /// Two-sided p-value from the t approximation.
    pub p_value: f64,
}

impl SerialPairs {
    /// CSV `k,u_k,u_k1`, followed by `#` summary lines.
    pub fn table(&self) -> String {
        let mut out = String::from("k,u_k,u_k1\n");
        for (k, (a, b)) in self.pairs.iter().enumerate() {
            let _ = writeln!(out, "{},{a},{b}", k + 1);
        }
        let _ = writeln!(out, "# correlation={}", self.correlation);
        let _ = writeln!(out, "# p_value={}", self.p_value);
        out
    }
}

/// Consecutive uniform pairs and their lag-one Pearson correlation.
pub fn serial_pairs(res: &ResidualSeries) -> Result<SerialPairs> {
    if res.n < 3 {
        return Err(Error::domain("serial pairs need at least 3 residuals"));
    }
    let pairs: Vec<(f64, f64)> = res.uniforms.windows(2).map(|w| (w[0], w[1])).collect();
    let m = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / m, b + y / m));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let r = if sxx > 0.0 && syy > 0.0 {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    } else if pairs.iter().all(|(x, y)| x == y) {
        1.0
    } else {
        0.0
    };
    let df = m - 2.0;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else if df < 1.0 {
        1.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * dist.sf(t.abs())
    };
    Ok(SerialPairs {
        pairs,
        correlation: r,
        p_value,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    /// KS statistic `D`.
    pub statistic: f64,
    /// Critical value `c / √n` at the chosen level.
    pub critical: f64,
    pub level: f64,
    pub pass: bool,
}

/// One-sample KS test of `u` against Uniform[0, 1), at 95%.
pub fn ks_uniform_test(u: &[f64]) -> Result<KsTest> {
    ks_uniform_test_at(u, 0.05)
}

/// One-sample KS test of `u` against Uniform[0, 1) at `level`.
pub fn ks_uniform_test_at(u: &[f64], level: f64) -> Result<KsTest> {
    if u.is_empty() || u.iter().any(|x| x.is_nan()) {
        return Err(Error::domain("KS test needs a non-empty, NaN-free sample"));
    }
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let d = s
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x.clamp(0.0, 1.0);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let critical = ks_constant(level)? / n.sqrt();
    Ok(KsTest {
        statistic: d,
        critical,
        level,
        pass: d <= critical,
    })
}

/// Two-sample KS test at `level` with the asymptotic critical value
/// `c √((n + m) / (n m))`.
pub fn ks_two_sample(a: &[f64], b: &[f64], level: f64) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() || a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::domain("KS test needs non-empty, NaN-free samples"));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let critical = ks_constant(level)? * ((n + m) / (n * m)).sqrt();
    Ok(KsTest {
        statistic: d,
        critical,
        level,
        pass: d <= critical,
    })
}
