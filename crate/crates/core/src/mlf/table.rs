use super::{Method, MittagLeffler};

const DEGREE: usize = 16;
const PANEL_WIDTH: f64 = 0.25;
const LOG_LO: f64 = -6.907_755_278_982_137; // ln 1e-3
const LOG_HI_MIN: f64 = 6.907_755_278_982_137; // ln 1e3

/// Piecewise Chebyshev interpolant of `h(L) = x E_{γ,δ}(-x)` with `x = e^L`.
///
/// Built once per parameter pair; inside `[ln 1e-3, max(ln 1e3, ln R_a)]`
/// an evaluation is a panel lookup and a degree-15 Clenshaw recurrence.
/// Outside that range it falls back to the exact evaluator.
#[derive(Debug, Clone)]
pub struct LogTable {
    plan: MittagLeffler,
    exponential: bool,
    lo: f64,
    hi: f64,
    inv_w: f64,
    coeffs: Vec<[f64; DEGREE]>,
}

impl LogTable {
    pub fn new(plan: &MittagLeffler) -> Self {
        if plan.method_for(1.0) == Method::Exponential {
            return LogTable {
                plan: plan.clone(),
                exponential: true,
                lo: 0.0,
                hi: 0.0,
                inv_w: 0.0,
                coeffs: Vec::new(),
            };
        }
        let lo = LOG_LO;
        let hi_target = plan.asymptotic_radius().ln().max(LOG_HI_MIN);
        let panels = if hi_target.is_finite() {
            ((hi_target - lo) / PANEL_WIDTH).ceil() as usize
        } else {
            ((LOG_HI_MIN - lo) / PANEL_WIDTH).ceil() as usize
        };
        let hi = lo + panels as f64 * PANEL_WIDTH;
        let n = DEGREE as f64;
        let theta: Vec<f64> = (0..DEGREE)
            .map(|j| std::f64::consts::PI * (j as f64 + 0.5) / n)
            .collect();
        let mut coeffs = Vec::with_capacity(panels);
        let mut values = [0.0; DEGREE];
        for p in 0..panels {
            let a = lo + p as f64 * PANEL_WIDTH;
            for (v, th) in values.iter_mut().zip(&theta) {
                let l = a + 0.5 * PANEL_WIDTH * (1.0 + th.cos());
                let x = l.exp();
                *v = x * plan.eval_neg(x);
            }
            let mut c = [0.0; DEGREE];
            for (k, ck) in c.iter_mut().enumerate() {
                let s: f64 = values
                    .iter()
                    .zip(&theta)
                    .map(|(v, th)| v * (k as f64 * th).cos())
                    .sum();
                *ck = 2.0 * s / n;
            }
            c[0] *= 0.5;
            coeffs.push(c);
        }
        LogTable {
            plan: plan.clone(),
            exponential: false,
            lo,
            hi,
            inv_w: 1.0 / PANEL_WIDTH,
            coeffs,
        }
    }

    pub fn plan(&self) -> &MittagLeffler {
        &self.plan
    }

    /// `x E_{γ,δ}(-x)` at `x = e^{ln_x}`.
    #[inline]
    pub fn eval(&self, ln_x: f64) -> f64 {
        if self.exponential {
            return (ln_x - ln_x.exp()).exp();
        }
        if ln_x >= self.lo && ln_x < self.hi {
            let s = (ln_x - self.lo) * self.inv_w;
            let idx = s as usize;
            let t = 2.0 * (s - idx as f64) - 1.0;
            let c = &self.coeffs[idx];
            let t2 = 2.0 * t;
            let (mut b1, mut b2) = (0.0, 0.0);
            for &ck in c[1..].iter().rev() {
                let b0 = ck + t2 * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            c[0] + t * b1 - b2
        } else {
            let x = ln_x.exp();
            x * self.plan.eval_neg(x)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_matches_exact_evaluator() {
        for &(g, d) in &[(0.3, 0.3), (0.55, 0.55), (0.7, 0.7), (0.93, 0.93), (0.7, 1.0), (1.0, 1.0)] {
            let plan = MittagLeffler::new(g, d).unwrap();
            let table = LogTable::new(&plan);
            let mut worst = 0.0f64;
            let mut l = -9.0;
            while l < 12.0 {
                let x = f64::exp(l);
                let exact = x * plan.eval_neg(x);
                if exact > 1e-300 {
                    worst = worst.max(((table.eval(l) - exact) / exact).abs());
                }
                l += 0.0137;
            }
            assert!(worst < 1e-12, "gamma={g} delta={d} worst={worst:e}");
        }
    }
}
