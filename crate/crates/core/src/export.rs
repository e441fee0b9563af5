//! The results bundle consumed by the map application, and its canonical JSON
//! encoding: sorted keys, floats at 6 significant digits, compact, LF-terminated.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::eb::{InstitutionEstimate, Interval, Significance};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub schema_version: u32,
    pub generated_at: String,
    pub subjects: Vec<SubjectResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectResult {
    pub subject: String,
    pub subject_name: String,
    pub n_institutions: usize,
    pub model: ModelSummary,
    pub institutions: Vec<ExportedInstitution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub beta0: f64,
    pub sigma2: f64,
    pub se_beta0: f64,
    pub se_sigma2: f64,
    pub icc: f64,
    pub wald_z: f64,
    pub wald_p: f64,
    /// Institutions vary systematically (Wald test significant at 5%).
    pub ranking_reasonable: bool,
    pub grand_mean_prob: f64,
    pub mean_raw_proportion: f64,
    pub loglik: f64,
    pub converged: bool,
    /// Two-sided level of the Goldstein-interval comparison with the mean.
    pub goldstein_mean_test_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportedInstitution {
    pub institution_id: String,
    pub name: String,
    pub country: String,
    pub latitude: f64,
    pub longitude: f64,
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

impl ExportedInstitution {
    pub fn from_estimate(
        est: &InstitutionEstimate,
        inst: &crate::corpus::InstitutionRecord,
    ) -> Self {
        Self {
            institution_id: est.institution_id.clone(),
            name: inst.name.clone(),
            country: inst.country.clone(),
            latitude: inst.latitude,
            longitude: inst.longitude,
            n_papers: est.n_papers,
            n_top: est.n_top,
            raw_prop: est.raw_prop,
            eb_logit: est.eb_logit,
            eb_se: est.eb_se,
            eb_prob: est.eb_prob,
            ci95: est.ci95,
            ci_goldstein: est.ci_goldstein,
            sig_vs_mean: est.sig_vs_mean,
            sig_vs_mean_goldstein: est.sig_vs_mean_goldstein,
            rank_score: est.rank_score,
            rank: est.rank,
        }
    }
}

/// Canonical JSON text of `doc`, newline-terminated.
pub fn to_canonical_json(doc: &ResultsDocument) -> Result<String> {
    let value = serde_json::to_value(doc)?;
    let mut out = String::new();
    write_value(&mut out, &value);
    out.push('\n');
    Ok(out)
}

pub fn export_results(doc: &ResultsDocument, path: &Path) -> Result<()> {
    let text = to_canonical_json(doc)?;
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn parse_results(text: &str) -> Result<ResultsDocument> {
    Ok(serde_json::from_str(text)?)
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(out, &map[k]);
            }
            out.push('}');
        }
    }
}

/// Six significant digits, shortest decimal form; non-finite values become null.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    let exp = rounded.abs().log10().floor() as i32;
    if (-7..21).contains(&exp) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}
