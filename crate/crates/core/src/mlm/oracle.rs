//! Brute-force reference for the marginal likelihood, used to check the
//! quadrature. Shares no code with the production path.

use crate::percentile::ClusterTable;

use super::fit::ModelParams;

/// Grid points per cluster for [`oracle_loglik`].
pub const ORACLE_POINTS: usize = 20_001;

/// Σ_j log ∫ Binom(k_j; n_j, logistic(β₀+u)) φ(u; 0, σ²) du by the trapezoid
/// rule on `u ∈ [−10σ, 10σ]`. Intended for small tables.
pub fn oracle_loglik(params: ModelParams, table: &ClusterTable) -> f64 {
    table
        .rows
        .iter()
        .map(|r| oracle_cluster(r.n, r.k, params.beta0, params.sigma_u0))
        .sum()
}

fn oracle_cluster(n: u64, k: u64, beta0: f64, sigma: f64) -> f64 {
    let log_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum();
    let log_binom = |eta: f64| {
        let p = 1.0 / (1.0 + (-eta).exp());
        let q = 1.0 / (1.0 + eta.exp());
        log_choose + k as f64 * p.ln() + (n - k) as f64 * q.ln()
    };
    if sigma == 0.0 {
        return log_binom(beta0);
    }
    let half = 10.0 * sigma;
    let h = 2.0 * half / (ORACLE_POINTS - 1) as f64;
    let log_norm = -0.5 * (2.0 * std::f64::consts::PI).ln() - sigma.ln();
    let logs: Vec<f64> = (0..ORACLE_POINTS)
        .map(|i| {
            let u = -half + i as f64 * h;
            let z = u / sigma;
            log_binom(beta0 + u) + log_norm - 0.5 * z * z
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for (i, l) in logs.iter().enumerate() {
        let w = if i == 0 || i == ORACLE_POINTS - 1 { 0.5 } else { 1.0 };
        acc += w * (l - max).exp();
    }
    max + (acc * h).ln()
}
