use excellence_core::mlm::oracle::oracle_loglik;
use excellence_core::mlm::{fit_model, marginal_loglik, FitOptions, ModelParams};
use excellence_core::numeric::logit;
use excellence_core::percentile::ClusterTable;
use excellence_core::simulate::simulate_cluster_table;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(beta0: f64, sigma_u0: f64) -> ModelParams {
    ModelParams { beta0, sigma_u0 }
}

#[test]
fn quadrature_matches_trapezoid_oracle() {
    let t = ClusterTable::from_counts("S", &[(5, 0), (5, 2), (5, 5)]).unwrap();
    let p = params(0.0, 1.0);
    let aghq = marginal_loglik(p, &t, 20).unwrap();
    let oracle = oracle_loglik(p, &t);
    assert!(((aghq - oracle) / oracle).abs() < 1e-8, "{aghq} vs {oracle}");

    let doubled = marginal_loglik(p, &t, 40).unwrap();
    assert!(((aghq - doubled) / aghq).abs() < 1e-10);
}

#[test]
fn oracle_degenerate_limit_and_symmetry() {
    let t = ClusterTable::from_counts("S", &[(10, 3)]).unwrap();
    let near_zero = oracle_loglik(params(logit(0.3), 1e-8), &t);
    let binom = marginal_loglik(params(logit(0.3), 0.0), &t, 1).unwrap();
    assert!((near_zero - binom).abs() < 1e-6);

    let a = ClusterTable::from_counts("S", &[(10, 2)]).unwrap();
    let b = ClusterTable::from_counts("S", &[(10, 8)]).unwrap();
    let (va, vb) = (oracle_loglik(params(0.0, 1.3), &a), oracle_loglik(params(0.0, 1.3), &b));
    assert!((va - vb).abs() < 1e-12);
    assert!(va <= 0.0 && va.is_finite());
}

#[test]
fn loglik_is_invariant_to_cluster_order() {
    let counts = [(40u64, 3u64), (12, 7), (50, 0), (33, 33), (20, 4)];
    let mut rev = counts;
    rev.reverse();
    let a = ClusterTable::from_counts("S", &counts).unwrap();
    let b = ClusterTable::from_counts("S", &rev).unwrap();
    let p = params(-0.7, 0.9);
    let (va, vb) = (marginal_loglik(p, &a, 20).unwrap(), marginal_loglik(p, &b, 20).unwrap());
    assert!(((va - vb) / va).abs() < 1e-15);
}

#[test]
fn recovers_simulated_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = simulate_cluster_table(&mut rng, "S", &vec![500; 200], logit(0.15), 0.5);
    let fit = fit_model(&t, FitOptions::default()).unwrap();
    assert!(fit.converged, "{fit:?}");
    assert!((fit.params.beta0 - logit(0.15)).abs() < 0.1, "{fit:?}");
    assert!((fit.sigma2() - 0.25).abs() < 0.0625, "{fit:?}");
    assert!(fit.wald_p < 0.05);
}

fn simulated(seed: u64, clusters: usize, size: u64, sigma: f64) -> ClusterTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_cluster_table(&mut rng, "S", &vec![size; clusters], logit(0.15), sigma)
}

fn central_gradient(table: &ClusterTable, beta0: f64, log_sigma: f64) -> [f64; 2] {
    let f = |b: f64, l: f64| marginal_loglik(params(b, l.exp()), table, 20).unwrap();
    let h = 1e-4;
    [
        (f(beta0 + h, log_sigma) - f(beta0 - h, log_sigma)) / (2.0 * h),
        (f(beta0, log_sigma + h) - f(beta0, log_sigma - h)) / (2.0 * h),
    ]
}

#[test]
fn optimum_is_stationary_and_quadrature_converged() {
    for seed in 0..5 {
        let t = simulated(100 + seed, 150, 300, 0.6);
        let fit = fit_model(&t, FitOptions::default()).unwrap();
        assert!(fit.converged && !fit.at_boundary);
        let g = central_gradient(&t, fit.params.beta0, fit.params.sigma_u0.ln());
        assert!(g.iter().all(|v| v.abs() < 1e-4), "seed {seed}: {g:?}");

        for n in [20usize, 40] {
            let a = marginal_loglik(fit.params, &t, n).unwrap();
            let b = marginal_loglik(fit.params, &t, 2 * n).unwrap();
            assert!(((a - b) / a).abs() < 1e-8, "nodes {n}: {a} vs {b}");
        }
        assert!((fit.loglik - marginal_loglik(fit.params, &t, 20).unwrap()).abs() < 1e-9 * fit.loglik.abs());
    }
}

#[test]
fn swapping_labels_negates_the_intercept() {
    let t = simulated(7, 120, 400, 0.5);
    let flipped = ClusterTable::from_counts(
        "S",
        &t.rows.iter().map(|r| (r.n, r.n - r.k)).collect::<Vec<_>>(),
    )
    .unwrap();
    let a = fit_model(&t, FitOptions::default()).unwrap();
    let b = fit_model(&flipped, FitOptions::default()).unwrap();
    assert!((a.params.beta0 + b.params.beta0).abs() < 1e-4);
    assert!((a.sigma2() - b.sigma2()).abs() < 1e-4);
}

#[test]
fn reported_quantities_are_consistent() {
    let t = simulated(21, 200, 500, 0.5);
    let fit = fit_model(&t, FitOptions::default()).unwrap();
    let s2 = fit.sigma2();
    assert!((fit.icc - s2 / (std::f64::consts::PI.powi(2) / 3.0 + s2)).abs() < 1e-15);
    assert!((fit.wald_z - s2 / fit.se_sigma2).abs() < 1e-12);
    assert!((fit.grand_mean_prob - excellence_core::numeric::logistic(fit.params.beta0)).abs() < 1e-15);
    assert_eq!(fit.n_clusters, 200);
    assert!(fit.warnings.is_empty());
    // se of the intercept is of the order 1/sqrt(clusters * binomial information)
    assert!(fit.se_beta0 > 0.02 && fit.se_beta0 < 0.06, "{}", fit.se_beta0);
}

#[test]
fn tight_iteration_budget_reports_non_convergence() {
    let t = simulated(3, 100, 500, 0.5);
    let fit = fit_model(
        &t,
        FitOptions {
            max_iter: 3,
            ..FitOptions::default()
        },
    )
    .unwrap();
    assert!(!fit.converged);
    assert!(excellence_core::mlm::wald_test(&fit).is_err());
}

#[test]
fn wald_test_size_under_the_null() {
    let reps = 200;
    let rejections = (0..reps)
        .filter(|&seed| {
            let t = simulated(10_000 + seed, 100, 500, 0.0);
            let fit = fit_model(&t, FitOptions::default()).unwrap();
            excellence_core::mlm::wald_test(&fit).unwrap().significant
        })
        .count();
    let rate = rejections as f64 / reps as f64;
    assert!(rate <= 0.075, "null rejection rate {rate}");
}
