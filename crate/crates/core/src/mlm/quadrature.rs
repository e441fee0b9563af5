use crate::error::{Error, Result};
use crate::numeric::{binomial_kernel, ln_binomial, log_sum_exp, CompensatedSum, GaussHermite};
use crate::percentile::ClusterTable;

use super::fit::ModelParams;
use super::posterior::{log_joint, posterior_mode};

/// Log marginal likelihood of one cluster, `log ∫ Binom(k; n, logistic(β₀+u)) φ(u; 0, σ²) du`,
/// by Gauss–Hermite quadrature recentred at the posterior mode and scaled by
/// the posterior curvature. With `sigma_u0 == 0` this is the binomial
/// log-probability.
pub fn cluster_loglik(n: u64, k: u64, params: ModelParams, rule: &GaussHermite) -> Option<f64> {
    let coef = ln_binomial(n, k);
    let sigma = params.sigma_u0;
    if sigma == 0.0 {
        return Some(coef + binomial_kernel(n, k, params.beta0));
    }
    let sigma2 = sigma * sigma;
    let post = posterior_mode(n, k, params.beta0, sigma2)?;
    let scale = std::f64::consts::SQRT_2 / post.curvature.sqrt();
    let terms: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| {
            let u = post.mode + scale * x;
            w.ln() + x * x + log_joint(n, k, params.beta0, sigma2, u)
        })
        .collect();
    let value = coef + scale.ln() + log_sum_exp(&terms);
    value.is_finite().then_some(value)
}

/// Σ_j of [`cluster_loglik`] with compensated summation in row order.
pub fn marginal_loglik(params: ModelParams, table: &ClusterTable, nodes: usize) -> Result<f64> {
    if nodes == 0 {
        return Err(Error::InvalidThreshold("quadrature needs at least one node".into()));
    }
    let rule = GaussHermite::new(nodes);
    loglik_with_rule(params, table, &rule)
}

pub(crate) fn loglik_with_rule(
    params: ModelParams,
    table: &ClusterTable,
    rule: &GaussHermite,
) -> Result<f64> {
    if !params.beta0.is_finite() || !params.sigma_u0.is_finite() || params.sigma_u0 < 0.0 {
        return Err(Error::Numerical {
            cluster: 0,
            message: format!("invalid parameters {params:?}"),
        });
    }
    let mut total = CompensatedSum::default();
    for (j, row) in table.rows.iter().enumerate() {
        let v = cluster_loglik(row.n, row.k, params, rule).ok_or_else(|| Error::Numerical {
            cluster: j,
            message: format!(
                "non-finite marginal likelihood for `{}` (n={}, k={})",
                row.institution_id, row.n, row.k
            ),
        })?;
        total.add(v);
    }
    Ok(total.value())
}
