//! Derivative-free simplex search and finite-difference derivatives, sized for
//! the two-parameter likelihood surface.

/// Result of a simplex search (maximisation).
#[derive(Debug, Clone)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Nelder–Mead maximisation of `f` from `start` with initial edge lengths `step`.
/// Stops when the spread of simplex values drops below `ftol` or after `max_iter`.
pub(crate) fn nelder_mead<F>(
    f: F,
    start: &[f64],
    step: &[f64],
    ftol: f64,
    max_iter: usize,
) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    // minimise −f; non-finite values are treated as +∞
    let obj = |x: &[f64]| {
        let v = -f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), obj(start)));
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += step[i];
        let v = obj(&x);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (worst - best).abs() <= ftol && worst.is_finite() {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = obj(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = obj(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[dim].1 {
            let x = along(alpha * rho);
            let v = obj(&x);
            (x, v)
        } else {
            let x = along(-rho);
            let v = obj(&x);
            (x, v)
        };
        if fc < simplex[dim].1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best_x) {
                *xi = bi + shrink * (*xi - bi);
            }
            *v = obj(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, v) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value: -v,
        iterations,
    }
}

/// Five-point central-difference gradient.
pub(crate) fn gradient<F>(f: &F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    (0..x.len())
        .map(|i| {
            let at = |d: f64| {
                let mut y = x.to_vec();
                y[i] += d;
                f(&y)
            };
            (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
        })
        .collect()
}

/// Central-difference Hessian, row-major `dim × dim`.
pub(crate) fn hessian<F>(f: &F, x: &[f64], h: f64) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x.len();
    let at = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut y = x.to_vec();
        y[di] += si * h;
        y[dj] += sj * h;
        f(&y)
    };
    let f0 = f(x);
    let mut out = vec![vec![0.0; dim]; dim];
    for i in 0..dim {
        out[i][i] = (at(i, 1.0, i, 0.0) - 2.0 * f0 + at(i, -1.0, i, 0.0)) / (h * h);
        for j in 0..i {
            let v = (at(i, 1.0, j, 1.0) - at(i, 1.0, j, -1.0) - at(i, -1.0, j, 1.0)
                + at(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Inverse of a symmetric 2×2 matrix, or `None` when singular.
pub(crate) fn invert_2x2(m: &[Vec<f64>]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !det.is_finite() || det.abs() < f64::MIN_POSITIVE {
        return None;
    }
    Some([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_finds_the_peak_of_a_quadratic() {
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - 3.0 * (x[1] + 2.0).powi(2) + 0.5 * x[0] * x[1];
        let r = nelder_mead(f, &[0.0, 0.0], &[0.5, 0.5], 1e-14, 2000);
        let g = gradient(&f, &r.x, 1e-3);
        assert!(g.iter().all(|v| v.abs() < 1e-5), "{g:?}");
    }

    #[test]
    fn rosenbrock_valley() {
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], 1e-16, 5000);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn finite_differences_match_analytic_derivatives() {
        let f = |x: &[f64]| (x[0] * x[1]).sin() + x[0].powi(3);
        let x = [0.3, 0.7];
        let g = gradient(&f, &x, 1e-3);
        assert!((g[0] - (0.7 * (0.21f64).cos() + 3.0 * 0.09)).abs() < 1e-10);
        assert!((g[1] - 0.3 * (0.21f64).cos()).abs() < 1e-10);
        let h = hessian(&f, &x, 1e-4);
        let s = (0.21f64).sin();
        assert!((h[0][0] - (-0.49 * s + 1.8)).abs() < 1e-6);
        assert!((h[0][1] - ((0.21f64).cos() - 0.21 * s)).abs() < 1e-6);
        assert_eq!(h[0][1], h[1][0]);
    }

    #[test]
    fn inverse_of_singular_matrix_is_none() {
        assert!(invert_2x2(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
        let inv = invert_2x2(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(inv, [[0.5, 0.0], [0.0, 0.25]]);
    }
}
