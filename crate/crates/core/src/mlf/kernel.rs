use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;

use super::MittagLeffler;
use crate::error::{Error, Result};

/// The fractional kernel `c f_β(ct)` and its survival function for one
/// `(β, c)` pair.
///
/// `density(t) = c^β t^{β-1} E_{β,β}(-(ct)^β)` is the probability density of a
/// Mittag-Leffler waiting time with survival `E_{β,1}(-(ct)^β)`. At `β = 1`
/// both reduce to the exponential law with rate `c`.
#[derive(Debug, Clone)]
pub struct MlKernel {
    beta: f64,
    c: f64,
    density: MittagLeffler,
    survival: MittagLeffler,
}

impl MlKernel {
    pub fn new(beta: f64, c: f64) -> Result<Self> {
        check_kernel_params(beta, c)?;
        Ok(MlKernel {
            beta,
            c,
            density: MittagLeffler::new(beta, beta)?,
            survival: MittagLeffler::new(beta, 1.0)?,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Evaluator for `E_{β,β}`.
    pub fn density_plan(&self) -> &MittagLeffler {
        &self.density
    }

    /// Evaluator for `E_{β,1}`.
    pub fn survival_plan(&self) -> &MittagLeffler {
        &self.survival
    }

    /// Kernel density at elapsed time `t > 0`; unchecked.
    #[inline]
    pub fn density_unchecked(&self, t: f64) -> f64 {
        if self.beta == 1.0 {
            return self.c * (-self.c * t).exp();
        }
        let u = self.c * t;
        let x = u.powf(self.beta);
        self.c * (x / u) * self.density.eval_neg(x)
    }

    /// Survival at elapsed time `t ≥ 0`; unchecked.
    #[inline]
    pub fn survival_unchecked(&self, t: f64) -> f64 {
        if self.beta == 1.0 {
            return (-self.c * t).exp();
        }
        self.survival.eval_neg((self.c * t).powf(self.beta))
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::domain(format!(
                "kernel evaluated at t = {t}; the kernel is singular at 0 and needs t > 0"
            )));
        }
        Ok(self.density_unchecked(t))
    }

    pub fn survival(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || t.is_nan() {
            return Err(Error::domain(format!("survival evaluated at t = {t} < 0")));
        }
        if t.is_infinite() {
            return Ok(0.0);
        }
        Ok(self.survival_unchecked(t))
    }

    /// Draw a waiting time with survival `E_{β,1}(-(ct)^β)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_ml(self.beta, self.c, rng)
    }
}

fn check_kernel_params(beta: f64, c: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::domain(format!("kernel index beta = {beta} outside (0, 1]")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("kernel time scale c = {c} must be positive")));
    }
    Ok(())
}

/// `c f_β(ct) = c^β t^{β-1} E_{β,β}(-(ct)^β)` for `t > 0`.
///
/// Builds a new [`MlKernel`] on each call; keep one around for repeated
/// evaluation.
pub fn ml_kernel(t: f64, beta: f64, c: f64) -> Result<f64> {
    MlKernel::new(beta, c)?.density(t)
}

/// `E_{β,1}(-(ct)^β)` for `t ≥ 0`.
pub fn ml_survival(t: f64, beta: f64, c: f64) -> Result<f64> {
    MlKernel::new(beta, c)?.survival(t)
}

/// Mittag-Leffler distributed waiting time, survival `E_{β,1}(-(ct)^β)`.
pub fn ml_random<R: Rng + ?Sized>(beta: f64, c: f64, rng: &mut R) -> Result<f64> {
    check_kernel_params(beta, c)?;
    Ok(sample_ml(beta, c, rng))
}

// T = W · Y^{1/β} / c with W ~ Exp(1) and
// Y = sin(βπ)/tan(βπV) − cos(βπ) = sin(βπ(1−V)) / sin(βπV), V ~ U(0,1).
// Y has density sin(βπ) / (βπ (y² + 2y cos βπ + 1)), the law of R^{-β} for the
// exponential-rate mixing variable R of the Mittag-Leffler distribution.
fn sample_ml<R: Rng + ?Sized>(beta: f64, c: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let w = -u.ln();
    if beta == 1.0 {
        return w / c;
    }
    let v: f64 = rng.sample(Open01);
    let bp = beta * PI;
    let y = (bp * (1.0 - v)).sin() / (bp * v).sin();
    w * y.powf(1.0 / beta) / c
}
