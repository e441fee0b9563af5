use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{logistic, logit, normal_sf, GaussHermite, LOGISTIC_VARIANCE};
use crate::percentile::ClusterTable;

use super::optimize::{gradient, hessian, invert_2x2, nelder_mead};
use super::quadrature::loglik_with_rule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Intercept on the logit scale.
    pub beta0: f64,
    /// Standard deviation of the institution random intercept.
    pub sigma_u0: f64,
}

impl ModelParams {
    pub fn sigma2(&self) -> f64 {
        self.sigma_u0 * self.sigma_u0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub nodes: usize,
    pub grad_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            nodes: 20,
            grad_tol: 1e-6,
            step_tol: 1e-8,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FitWarning {
    /// Fewer than 100 institutions: the variance test has little power.
    FewClusters(usize),
    /// σ̂ reached zero; the variance test is reported with p = 0.5.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub se_beta0: f64,
    pub se_sigma2: f64,
    pub loglik: f64,
    pub icc: f64,
    pub wald_z: f64,
    /// One-sided upper-tail p-value of `wald_z`.
    pub wald_p: f64,
    pub converged: bool,
    pub at_boundary: bool,
    pub n_clusters: usize,
    pub grand_mean_prob: f64,
    pub iterations: usize,
    pub nodes: usize,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn sigma2(&self) -> f64 {
        self.params.sigma2()
    }
}

/// Intra-class correlation on the latent scale, `σ² / (π²/3 + σ²)`.
pub fn icc(sigma2: f64) -> f64 {
    sigma2 / (LOGISTIC_VARIANCE + sigma2)
}

/// Below this σ the fit is reported at the boundary σ̂ = 0.
const SIGMA_FLOOR: f64 = 1e-4;
const MAX_LOG_SIGMA: f64 = 3.912_023_005_428_146; // ln 50
const MAX_ABS_BETA0: f64 = 30.0;
const GRAD_STEP: f64 = 1e-3;
const HESS_STEP: f64 = 1e-3;
const FEW_CLUSTERS: usize = 100;

/// Maximum marginal likelihood fit over `(β₀, ln σ)`: a simplex search gets
/// close, Newton steps on finite-difference derivatives finish, and standard
/// errors come from the inverse negative Hessian (delta method for σ²).
pub fn fit_model(table: &ClusterTable, options: FitOptions) -> Result<FitResult> {
    if table.rows.iter().all(|r| r.k == 0) {
        return Err(Error::DegenerateOutcome { all_top: false });
    }
    if table.rows.iter().all(|r| r.k == r.n) {
        return Err(Error::DegenerateOutcome { all_top: true });
    }
    if options.nodes == 0 {
        return Err(Error::InvalidThreshold("quadrature needs at least one node".into()));
    }

    let mut warnings = Vec::new();
    if table.len() < FEW_CLUSTERS {
        log::warn!(
            "subject `{}`: only {} institutions; the variance test has low power below {FEW_CLUSTERS}",
            table.subject,
            table.len()
        );
        warnings.push(FitWarning::FewClusters(table.len()));
    }

    let rule = GaussHermite::new(options.nodes);
    let objective = |theta: &[f64]| -> f64 {
        let (beta0, log_sigma) = (theta[0], theta[1]);
        if beta0.abs() > MAX_ABS_BETA0 || log_sigma > MAX_LOG_SIGMA || !log_sigma.is_finite() {
            return f64::NEG_INFINITY;
        }
        let sigma = log_sigma.exp();
        let params = ModelParams {
            beta0,
            sigma_u0: if sigma < 1e-8 { 0.0 } else { sigma },
        };
        loglik_with_rule(params, table, &rule).unwrap_or(f64::NEG_INFINITY)
    };

    let boundary = boundary_fit(table, &rule)?;
    let start = starting_values(table);
    let simplex = nelder_mead(&objective, &start, &[0.3, 0.5], 1e-10, options.max_iter);
    let mut theta = simplex.x;
    let mut value = simplex.value;
    let mut iterations = simplex.iterations;

    let mut grad = gradient(&objective, &theta, GRAD_STEP);
    let mut stalled = false;
    while norm(&grad) >= options.grad_tol
        && iterations < options.max_iter
        && theta[1].exp() >= SIGMA_FLOOR
    {
        iterations += 1;
        let h = hessian(&objective, &theta, HESS_STEP);
        let step: Vec<f64> = match invert_2x2(&h) {
            Some(inv) if h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0 => {
                vec![
                    -(inv[0][0] * grad[0] + inv[0][1] * grad[1]),
                    -(inv[1][0] * grad[0] + inv[1][1] * grad[1]),
                ]
            }
            _ => {
                let g = norm(&grad);
                grad.iter().map(|v| 0.1 * v / g).collect()
            }
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = [theta[0] + t * step[0], theta[1] + t * step[1]];
            let v = objective(&cand);
            if v >= value - 1e-12 * value.abs() {
                accepted = Some((cand, v));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            stalled = true;
            break;
        };
        let moved = ((cand[0] - theta[0]).powi(2) + (cand[1] - theta[1]).powi(2)).sqrt();
        theta = cand.to_vec();
        value = v;
        grad = gradient(&objective, &theta, GRAD_STEP);
        if moved < options.step_tol {
            stalled = norm(&grad) >= options.grad_tol;
            break;
        }
    }

    let sigma = theta[1].exp();
    if sigma < SIGMA_FLOOR || boundary.loglik >= value {
        let mut fit = boundary;
        fit.iterations = iterations;
        fit.nodes = options.nodes;
        fit.warnings.splice(0..0, warnings);
        return Ok(fit);
    }

    let converged = !stalled && norm(&grad) < options.grad_tol;
    let h = hessian(&objective, &theta, HESS_STEP);
    let (se_beta0, se_log_sigma) = match invert_2x2(&h) {
        Some(inv) if -inv[0][0] > 0.0 && -inv[1][1] > 0.0 => ((-inv[0][0]).sqrt(), (-inv[1][1]).sqrt()),
        _ => (f64::NAN, f64::NAN),
    };
    let sigma2 = sigma * sigma;
    let se_sigma2 = 2.0 * sigma2 * se_log_sigma;
    let wald_z = sigma2 / se_sigma2;
    let params = ModelParams {
        beta0: theta[0],
        sigma_u0: sigma,
    };
    Ok(FitResult {
        params,
        se_beta0,
        se_sigma2,
        loglik: value,
        icc: icc(sigma2),
        wald_z,
        wald_p: normal_sf(wald_z),
        converged: converged && se_beta0.is_finite() && se_sigma2.is_finite(),
        at_boundary: false,
        n_clusters: table.len(),
        grand_mean_prob: logistic(theta[0]),
        iterations,
        nodes: options.nodes,
        warnings,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The σ = 0 model: a single binomial proportion with a closed-form MLE.
fn boundary_fit(table: &ClusterTable, rule: &GaussHermite) -> Result<FitResult> {
    let (n, k) = table
        .rows
        .iter()
        .fold((0u64, 0u64), |(n, k), r| (n + r.n, k + r.k));
    let p = k as f64 / n as f64;
    let params = ModelParams {
        beta0: logit(p),
        sigma_u0: 0.0,
    };
    let loglik = loglik_with_rule(params, table, rule)?;
    Ok(FitResult {
        params,
        se_beta0: 1.0 / (n as f64 * p * (1.0 - p)).sqrt(),
        se_sigma2: 0.0,
        loglik,
        icc: 0.0,
        wald_z: 0.0,
        wald_p: 0.5,
        converged: true,
        at_boundary: true,
        n_clusters: table.len(),
        grand_mean_prob: p,
        iterations: 0,
        nodes: rule.len(),
        warnings: vec![FitWarning::Boundary],
    })
}

/// Pooled logit for β₀; σ from the excess spread of empirical logits.
fn starting_values(table: &ClusterTable) -> Vec<f64> {
    let (n, k) = table
        .rows
        .iter()
        .fold((0u64, 0u64), |(n, k), r| (n + r.n, k + r.k));
    let beta0 = logit(k as f64 / n as f64);
    let m = table.len() as f64;
    let logits: Vec<(f64, f64)> = table
        .rows
        .iter()
        .map(|r| {
            let a = r.k as f64 + 0.5;
            let b = (r.n - r.k) as f64 + 0.5;
            ((a / b).ln(), 1.0 / a + 1.0 / b)
        })
        .collect();
    let mean = logits.iter().map(|l| l.0).sum::<f64>() / m;
    let spread = logits.iter().map(|l| (l.0 - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    let noise = logits.iter().map(|l| l.1).sum::<f64>() / m;
    let sigma = (spread - noise).max(0.01).sqrt();
    vec![beta0, sigma.ln()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldOutcome {
    pub z: f64,
    pub p: f64,
    pub significant: bool,
}

/// One-sided Wald test of σ² > 0 at α = 0.05. At the boundary σ̂² = 0 the
/// p-value is 0.5 by convention.
pub fn wald_test(fit: &FitResult) -> Result<WaldOutcome> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    let sigma2 = fit.sigma2();
    if sigma2 == 0.0 {
        return Ok(WaldOutcome {
            z: 0.0,
            p: 0.5,
            significant: false,
        });
    }
    if !(fit.se_sigma2 > 0.0) || !fit.se_sigma2.is_finite() {
        return Err(Error::UndefinedWaldTest);
    }
    let z = sigma2 / fit.se_sigma2;
    let p = normal_sf(z);
    Ok(WaldOutcome {
        z,
        p,
        significant: p < 0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icc_reference_points() {
        assert_eq!(icc(LOGISTIC_VARIANCE), 0.5);
        assert_eq!(icc(0.0), 0.0);
        assert!((icc(3.29) - 0.5).abs() < 2e-5);
    }

    fn dummy_fit(sigma: f64, se_sigma2: f64) -> FitResult {
        FitResult {
            params: ModelParams {
                beta0: -1.7,
                sigma_u0: sigma,
            },
            se_beta0: 0.05,
            se_sigma2,
            loglik: -1.0,
            icc: icc(sigma * sigma),
            wald_z: 0.0,
            wald_p: 0.5,
            converged: true,
            at_boundary: sigma == 0.0,
            n_clusters: 200,
            grand_mean_prob: logistic(-1.7),
            iterations: 1,
            nodes: 20,
            warnings: vec![],
        }
    }

    #[test]
    fn wald_reference_value() {
        let w = wald_test(&dummy_fit(0.5, 0.05)).unwrap();
        assert!((w.z - 5.0).abs() < 1e-12);
        assert!((w.p / 2.866515718791933e-7 - 1.0).abs() < 1e-9);
        assert!(w.significant);
    }

    #[test]
    fn wald_boundary_and_undefined_cases() {
        let w = wald_test(&dummy_fit(0.0, 0.0)).unwrap();
        assert_eq!((w.p, w.significant), (0.5, false));
        assert!(matches!(wald_test(&dummy_fit(0.5, 0.0)), Err(Error::UndefinedWaldTest)));
        let mut f = dummy_fit(0.5, 0.05);
        f.converged = false;
        assert!(matches!(wald_test(&f), Err(Error::NotConverged)));
    }

    #[test]
    fn degenerate_outcomes_are_diagnosed() {
        let zeros = ClusterTable::from_counts("S", &[(10, 0), (20, 0)]).unwrap();
        assert!(matches!(
            fit_model(&zeros, FitOptions::default()),
            Err(Error::DegenerateOutcome { all_top: false })
        ));
        let full = ClusterTable::from_counts("S", &[(10, 10), (20, 20)]).unwrap();
        assert!(matches!(
            fit_model(&full, FitOptions::default()),
            Err(Error::DegenerateOutcome { all_top: true })
        ));
    }

    #[test]
    fn homogeneous_clusters_fit_at_the_boundary() {
        let counts = vec![(10_000u64, 1_500u64); 60];
        let t = ClusterTable::from_counts("S", &counts).unwrap();
        let fit = fit_model(&t, FitOptions::default()).unwrap();
        assert!(fit.at_boundary && fit.converged);
        assert_eq!(fit.sigma2(), 0.0);
        assert!((fit.params.beta0 - logit(0.15)).abs() < 1e-12);
        assert_eq!(fit.wald_p, 0.5);
        assert!(fit.warnings.contains(&FitWarning::FewClusters(60)));
    }
}
