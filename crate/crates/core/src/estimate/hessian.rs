use nalgebra::DMatrix;

/// Central-difference Hessian of `f` at `theta` with per-coordinate steps.
///
/// Where `theta_j ± h_j` would leave `[lower_j, upper_j]` the stencil centre
/// is moved one step inwards, which turns the central stencil into a
/// one-sided one in that coordinate. Returns the symmetrized matrix and
/// whether any coordinate needed the shift.
pub fn fd_hessian<F>(
    mut f: F,
    theta: &[f64],
    steps: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> (DMatrix<f64>, bool)
where
    F: FnMut(&[f64]) -> f64,
{
    let k = theta.len();
    let mut centre = theta.to_vec();
    let mut boundary = false;
    for j in 0..k {
        let h = steps[j];
        if centre[j] - h <= lower[j] {
            centre[j] = lower[j] + h * (1.0 + 1e-9);
            boundary = true;
        } else if centre[j] + h > upper[j] {
            centre[j] = upper[j] - h;
            boundary = true;
        }
    }

    let mut at = |offsets: &[(usize, f64)]| -> f64 {
        let mut x = centre.clone();
        for &(j, d) in offsets {
            x[j] += d;
        }
        f(&x)
    };

    let f0 = at(&[]);
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        let hi = steps[i];
        let fp = at(&[(i, hi)]);
        let fm = at(&[(i, -hi)]);
        h[(i, i)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let fpp = at(&[(i, hi), (j, hj)]);
            let fpm = at(&[(i, hi), (j, -hj)]);
            let fmp = at(&[(i, -hi), (j, hj)]);
            let fmm = at(&[(i, -hi), (j, -hj)]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    (h, boundary)
}

/// The step rule `h_j = max(1e-4, 1e-4 |θ_j|)`.
pub fn default_steps(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| (1e-4 * t.abs()).max(1e-4)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let a = [[4.0, 1.0, -0.5], [1.0, 3.0, 0.25], [-0.5, 0.25, 2.0]];
        let f = |x: &[f64]| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += 0.5 * a[i][j] * x[i] * x[j];
                }
            }
            s + 3.0 * x[0] - x[2]
        };
        let theta = [0.3, -1.2, 2.0];
        let inf = [f64::INFINITY; 3];
        let ninf = [f64::NEG_INFINITY; 3];
        let (h, b) = fd_hessian(f, &theta, &default_steps(&theta), &ninf, &inf);
        assert!(!b);
        for i in 0..3 {
            for j in 0..3 {
                assert!((h[(i, j)] - a[i][j]).abs() < 1e-6, "{i}{j} {}", h[(i, j)]);
            }
        }
    }

    #[test]
    fn boundary_shifts_inwards() {
        let f = |x: &[f64]| {
            assert!(x[0] >= 0.0 && x[1] <= 1.0);
            x[0] * x[0] + 2.0 * x[1] * x[1]
        };
        let (h, b) = fd_hessian(f, &[0.0, 1.0], &[1e-4, 1e-4], &[0.0, 0.0], &[10.0, 1.0]);
        assert!(b);
        assert!((h[(0, 0)] - 2.0).abs() < 1e-5 && (h[(1, 1)] - 4.0).abs() < 1e-5);
    }
}
