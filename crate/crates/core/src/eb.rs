//! Empirical Bayes (posterior-mode) estimates per institution, comparison
//! intervals, significance against the field mean and the rank score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlm::{posterior_mode, FitResult};
use crate::numeric::{logistic, normal_sf};
use crate::percentile::ClusterTable;

/// Multiplier for the two-sided 95% interval.
pub const Z_95: f64 = 1.96;
/// Multiplier for Goldstein–Healy intervals: non-overlap of two such
/// intervals is a pairwise test at roughly 5%.
pub const Z_GOLDSTEIN: f64 = 1.39;

/// Two-sided level of comparing a Goldstein interval with a fixed value.
pub fn goldstein_mean_test_level() -> f64 {
    2.0 * normal_sf(Z_GOLDSTEIN)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Above,
    NotDistinguishable,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AHigher,
    BHigher,
    NotDistinguishable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    pub eb_logit: f64,
    pub eb_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstitutionEstimate {
    pub subject: String,
    pub institution_id: String,
    pub n_papers: u64,
    pub n_top: u64,
    pub raw_prop: f64,
    pub eb_logit: f64,
    pub eb_se: f64,
    pub eb_prob: f64,
    pub ci95: Interval,
    pub ci_goldstein: Interval,
    pub sig_vs_mean: Significance,
    pub sig_vs_mean_goldstein: Significance,
    pub rank_score: f64,
    pub rank: usize,
}

/// Posterior mode of `β₀ + u_j` and its curvature-based standard error.
/// With σ̂² = 0 every institution collapses onto β̂₀.
pub fn posterior_summary(fit: &FitResult, n: u64, k: u64) -> Result<PosteriorSummary> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    let sigma2 = fit.sigma2();
    if sigma2 == 0.0 {
        return Ok(PosteriorSummary {
            eb_logit: fit.params.beta0,
            eb_se: fit.se_beta0,
        });
    }
    let post = posterior_mode(n, k, fit.params.beta0, sigma2).ok_or_else(|| Error::Numerical {
        cluster: 0,
        message: format!("posterior mode search failed for n={n}, k={k}"),
    })?;
    Ok(PosteriorSummary {
        eb_logit: fit.params.beta0 + post.mode,
        eb_se: 1.0 / post.curvature.sqrt(),
    })
}

/// 95% and Goldstein-adjusted intervals, built on the logit scale and mapped
/// to probabilities.
pub fn intervals(eb_logit: f64, eb_se: f64) -> (Interval, Interval) {
    let band = |z: f64| Interval {
        lo: logistic(eb_logit - z * eb_se),
        hi: logistic(eb_logit + z * eb_se),
    };
    (band(Z_95), band(Z_GOLDSTEIN))
}

/// Position of an interval relative to the grand mean probability. Touching
/// counts as containment.
pub fn significance_vs_mean(ci: Interval, grand_mean_prob: f64) -> Significance {
    if ci.lo > grand_mean_prob {
        Significance::Above
    } else if ci.hi < grand_mean_prob {
        Significance::Below
    } else {
        Significance::NotDistinguishable
    }
}

/// `ln(eb_prob / grand_mean_prob)`: doubling and halving lie equally far from 0.
pub fn rank_score(eb_prob: f64, grand_mean_prob: f64) -> f64 {
    eb_prob.ln() - grand_mean_prob.ln()
}

/// Pairwise verdict from Goldstein interval overlap.
pub fn compare_institutions(a: &InstitutionEstimate, b: &InstitutionEstimate) -> Result<Comparison> {
    if a.subject != b.subject {
        return Err(Error::CrossSubject(a.subject.clone(), b.subject.clone()));
    }
    Ok(if a.ci_goldstein.lo > b.ci_goldstein.hi {
        Comparison::AHigher
    } else if b.ci_goldstein.lo > a.ci_goldstein.hi {
        Comparison::BHigher
    } else {
        Comparison::NotDistinguishable
    })
}

/// Estimates for every row of `table`, sorted by rank (rank score descending,
/// institution id breaking exact ties).
pub fn estimate_institutions(fit: &FitResult, table: &ClusterTable) -> Result<Vec<InstitutionEstimate>> {
    let grand = fit.grand_mean_prob;
    let mut out = table
        .rows
        .iter()
        .map(|row| {
            let s = posterior_summary(fit, row.n, row.k)?;
            let eb_prob = logistic(s.eb_logit);
            let (ci95, ci_goldstein) = intervals(s.eb_logit, s.eb_se);
            Ok(InstitutionEstimate {
                subject: table.subject.clone(),
                institution_id: row.institution_id.clone(),
                n_papers: row.n,
                n_top: row.k,
                raw_prop: row.k as f64 / row.n as f64,
                eb_logit: s.eb_logit,
                eb_se: s.eb_se,
                eb_prob,
                ci95,
                ci_goldstein,
                sig_vs_mean: significance_vs_mean(ci95, grand),
                sig_vs_mean_goldstein: significance_vs_mean(ci_goldstein, grand),
                rank_score: rank_score(eb_prob, grand),
                rank: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        b.eb_logit
            .total_cmp(&a.eb_logit)
            .then_with(|| a.institution_id.cmp(&b.institution_id))
    });
    for (i, e) in out.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(out)
}
