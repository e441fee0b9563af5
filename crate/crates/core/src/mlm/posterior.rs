use crate::numeric::{binomial_kernel, logistic};

/// Mode and curvature of one cluster's random-effect posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMode {
    /// û, the maximiser of `k·η − n·ln(1+e^η) − u²/(2σ²)` with `η = β₀ + u`.
    pub mode: f64,
    /// Negative second derivative at the mode, `n·p(1−p) + 1/σ²`.
    pub curvature: f64,
}

const TOL: f64 = 1e-10;
const MAX_NEWTON: usize = 100;
const MAX_BISECT: usize = 400;

/// Finds the posterior mode of `u` for a cluster with `k` successes out of `n`
/// by Newton's method kept inside a sign-change bracket; falls back to plain
/// bisection if Newton does not settle. Requires `sigma2 > 0`.
///
/// The score `k − n·logistic(β₀+u) − u/σ²` is strictly decreasing, and its root
/// lies between 0 and `σ²·(k − n·logistic(β₀))`.
pub fn posterior_mode(n: u64, k: u64, beta0: f64, sigma2: f64) -> Option<PosteriorMode> {
    if !(sigma2 > 0.0) || !beta0.is_finite() || !sigma2.is_finite() {
        return None;
    }
    let (nf, kf) = (n as f64, k as f64);
    let score = |u: f64| kf - nf * logistic(beta0 + u) - u / sigma2;
    let curvature = |u: f64| {
        let p = logistic(beta0 + u);
        nf * p * (1.0 - p) + 1.0 / sigma2
    };

    let far = sigma2 * (kf - nf * logistic(beta0));
    let (mut lo, mut hi) = if far >= 0.0 { (0.0, far) } else { (far, 0.0) };
    if lo == hi {
        return Some(PosteriorMode {
            mode: lo,
            curvature: curvature(lo),
        });
    }

    let mut u = 0.0;
    for _ in 0..MAX_NEWTON {
        let s = score(u);
        if s == 0.0 {
            return finish(u, curvature(u));
        }
        if s > 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let mut next = u + s / curvature(u);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - u).abs();
        u = next;
        if step <= TOL * (1.0 + u.abs()) {
            return finish(u, curvature(u));
        }
    }

    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= TOL * (1.0 + mid.abs()) {
            let u = 0.5 * (lo + hi);
            return finish(u, curvature(u));
        }
    }
    None
}

fn finish(mode: f64, curvature: f64) -> Option<PosteriorMode> {
    (mode.is_finite() && curvature.is_finite() && curvature > 0.0)
        .then_some(PosteriorMode { mode, curvature })
}

/// Unnormalised log posterior of `u`, including the normal log-density.
pub(crate) fn log_joint(n: u64, k: u64, beta0: f64, sigma2: f64, u: f64) -> f64 {
    binomial_kernel(n, k, beta0 + u)
        - 0.5 * u * u / sigma2
        - 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln()
}
