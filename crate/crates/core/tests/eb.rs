use excellence_core::eb::{intervals, posterior_summary, rank_score};
use excellence_core::mlm::{icc, FitResult, ModelParams};
use excellence_core::numeric::{logistic, logit};
use proptest::prelude::*;

fn fit(beta0: f64, sigma2: f64) -> FitResult {
    FitResult {
        params: ModelParams {
            beta0,
            sigma_u0: sigma2.sqrt(),
        },
        se_beta0: 0.03,
        se_sigma2: 0.02,
        loglik: -1.0,
        icc: icc(sigma2),
        wald_z: sigma2 / 0.02,
        wald_p: 0.0,
        converged: true,
        at_boundary: false,
        n_clusters: 200,
        grand_mean_prob: logistic(beta0),
        iterations: 1,
        nodes: 20,
        warnings: vec![],
    }
}

/// argmax over u ∈ [−5, 5] on a 1e-4 grid of the cluster log posterior.
fn grid_mode(n: u64, k: u64, beta0: f64, sigma2: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=100_000 {
        let u = -5.0 + i as f64 * 1e-4;
        let eta = beta0 + u;
        let v = k * eta - n * (1.0 + eta.exp()).ln() - u * u / (2.0 * sigma2);
        if v > best.0 {
            best = (v, u);
        }
    }
    best.1
}

#[test]
fn mode_matches_grid_search() {
    let beta0 = logit(0.15);
    let s = posterior_summary(&fit(beta0, 0.25), 500, 100).unwrap();
    let grid = grid_mode(500, 100, beta0, 0.25);
    assert!((s.eb_logit - beta0 - grid).abs() < 1e-3);
}

#[test]
fn equal_se_goldstein_overlap_is_a_five_percent_test() {
    let z = 2.0 * 1.39 / 2f64.sqrt();
    assert!((z - 1.966).abs() < 1e-3);
    let size = 2.0 * excellence_core::numeric::normal_sf(z);
    assert!((size - 0.049).abs() < 1e-3, "{size}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn estimates_are_sandwiched(
        n in 1u64..5000,
        frac in 0.0f64..=1.0,
        grand in 0.02f64..0.6,
        sigma2 in 0.01f64..3.0,
    ) {
        let k = ((n as f64) * frac).round() as u64;
        let f = fit(logit(grand), sigma2);
        let s = posterior_summary(&f, n, k).unwrap();
        let eb = logistic(s.eb_logit);
        let raw = k as f64 / n as f64;
        let m = f.grand_mean_prob;
        if raw != m {
            prop_assert!((eb - raw) * (eb - m) < 0.0, "eb {eb} raw {raw} mean {m}");
        }
    }

    #[test]
    fn more_papers_means_less_shrinkage(
        base_n in 1u64..200,
        frac in 0.0f64..=1.0,
        grand in 0.02f64..0.6,
        sigma2 in 0.01f64..3.0,
        m1 in 1u64..10,
        extra in 1u64..10,
    ) {
        let base_k = ((base_n as f64) * frac).round() as u64;
        let f = fit(logit(grand), sigma2);
        let raw = base_k as f64 / base_n as f64;
        prop_assume!(raw != f.grand_mean_prob);
        let at = |m: u64| logistic(posterior_summary(&f, base_n * m, base_k * m).unwrap().eb_logit);
        let (small, large) = (at(m1), at(m1 + extra));
        prop_assert!((large - raw).abs() < (small - raw).abs());
    }

    #[test]
    fn goldstein_interval_nests_inside_the_95_interval(logit_v in -6.0f64..3.0, se in 1e-3f64..2.0) {
        let (ci95, gold) = intervals(logit_v, se);
        prop_assert!(ci95.lo < gold.lo && gold.hi < ci95.hi);
        prop_assert!(ci95.lo > 0.0 && ci95.hi < 1.0);
    }

    #[test]
    fn rank_score_is_antisymmetric(m in 0.01f64..0.3, c in 0.2f64..3.0) {
        prop_assume!(c * m < 1.0);
        prop_assert!((rank_score(c * m, m) + rank_score(m / c, m)).abs() < 1e-12);
    }
}
