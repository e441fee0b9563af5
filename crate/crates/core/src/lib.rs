//! Institution-level excellence indicators: stratified citation percentiles,
//! random-intercept logistic models per subject area and Empirical Bayes
//! estimates with comparison intervals.

pub mod corpus;
pub mod eb;
pub mod error;
pub mod export;
pub mod mlm;
pub mod numeric;
pub mod percentile;
pub mod pipeline;
pub mod simulate;
pub mod subjects;

pub use error::{Error, Result};
