//! Random-intercept logistic model: `logit P(top paper in institution j) = β₀ + u_j`,
//! `u_j ~ N(0, σ²)`, fitted by maximum marginal likelihood.

mod fit;
mod optimize;
pub mod oracle;
mod posterior;
mod quadrature;

pub use fit::{fit_model, icc, wald_test, FitOptions, FitResult, FitWarning, ModelParams, WaldOutcome};
pub use posterior::{posterior_mode, PosteriorMode};
pub use quadrature::{cluster_loglik, marginal_loglik};
