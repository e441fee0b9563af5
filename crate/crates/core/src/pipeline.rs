//! End-to-end run: for each subject, percentiles → cluster counts → model fit
//! → institution estimates. Subjects are independent; a failure in one is
//! reported as a diagnostic and does not affect the others.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use rayon::prelude::*;

use crate::corpus::{apply_thresholds, attribute_full_counting, Corpus, Thresholds};
use crate::eb::{estimate_institutions, goldstein_mean_test_level};
use crate::error::{Error, ParseError, Result};
use crate::export::{ExportedInstitution, ModelSummary, ResultsDocument, SubjectResult, SCHEMA_VERSION};
use crate::mlm::{fit_model, wald_test, FitOptions};
use crate::percentile::{assign_subject, tabulate_clusters, tabulate_with, PercentileAssignment};
use crate::subjects::display_name;

#[derive(Debug, Clone, PartialEq)]
pub enum SubjectSelection {
    All,
    Only(Vec<String>),
}

/// Where class-10% flags come from.
#[derive(Debug, Clone, Default)]
pub enum ClassSource {
    /// Stratified percentiles computed from citations.
    #[default]
    Percentiles,
    /// Flags keyed by `(subject, paper_id)`, e.g. a simulator's table.
    Precomputed(HashMap<(String, String), bool>),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub subjects: SubjectSelection,
    pub year_min: i32,
    pub year_max: i32,
    pub thresholds: Thresholds,
    pub quad_nodes: usize,
    pub generated_at: String,
    pub class_source: ClassSource,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            subjects: SubjectSelection::All,
            year_min: 2005,
            year_max: 2009,
            thresholds: Thresholds::default(),
            quad_nodes: 20,
            generated_at: "1970-01-01T00:00:00Z".to_string(),
            class_source: ClassSource::Percentiles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectDiagnostic {
    pub subject: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub document: ResultsDocument,
    pub diagnostics: Vec<SubjectDiagnostic>,
    /// Percentile assignments of every processed subject, in subject order.
    pub assignments: Vec<PercentileAssignment>,
}

struct SubjectOutcome {
    result: std::result::Result<SubjectResult, String>,
    assignments: Vec<PercentileAssignment>,
}

pub fn run_pipeline(corpus: &Corpus, config: &PipelineConfig) -> Result<PipelineOutput> {
    if config.year_min > config.year_max {
        return Err(Error::InvalidThreshold(format!(
            "year_min {} exceeds year_max {}",
            config.year_min, config.year_max
        )));
    }
    if config.quad_nodes == 0 {
        return Err(Error::InvalidThreshold("quad_nodes must be at least 1".into()));
    }
    let present = corpus.subjects();
    let subjects: BTreeSet<String> = match &config.subjects {
        SubjectSelection::All => present.clone(),
        SubjectSelection::Only(list) => list.iter().cloned().collect(),
    };

    let outcomes: Vec<(String, SubjectOutcome)> = subjects
        .into_par_iter()
        .map(|subject| {
            let outcome = if present.contains(&subject) {
                run_subject(corpus, &subject, config)
            } else {
                SubjectOutcome {
                    result: Err("subject not present in the corpus".to_string()),
                    assignments: Vec::new(),
                }
            };
            (subject, outcome)
        })
        .collect();

    let mut results = Vec::new();
    let mut diagnostics = Vec::new();
    let mut assignments = Vec::new();
    for (subject, outcome) in outcomes {
        assignments.extend(outcome.assignments);
        match outcome.result {
            Ok(r) => results.push(r),
            Err(reason) => {
                log::warn!("subject `{subject}`: {reason}");
                diagnostics.push(SubjectDiagnostic { subject, reason });
            }
        }
    }
    Ok(PipelineOutput {
        document: ResultsDocument {
            schema_version: SCHEMA_VERSION,
            generated_at: config.generated_at.clone(),
            subjects: results,
        },
        diagnostics,
        assignments,
    })
}

fn run_subject(corpus: &Corpus, subject: &str, config: &PipelineConfig) -> SubjectOutcome {
    let papers = corpus.papers_in(subject, config.year_min, config.year_max);
    if papers.is_empty() {
        return SubjectOutcome {
            result: Err(format!(
                "no papers between {} and {}",
                config.year_min, config.year_max
            )),
            assignments: Vec::new(),
        };
    }
    let assignments = match config.class_source {
        ClassSource::Percentiles => assign_subject(papers.iter().copied(), subject),
        ClassSource::Precomputed(_) => Vec::new(),
    };
    let result = fit_subject(corpus, subject, &papers, &assignments, config).map_err(|e| match e {
        Error::SubjectRejected {
            surviving,
            min_institutions,
            ..
        } => format!("below min_institutions ({surviving} < {min_institutions})"),
        other => other.to_string(),
    });
    SubjectOutcome { result, assignments }
}

fn fit_subject(
    corpus: &Corpus,
    subject: &str,
    papers: &[&crate::corpus::PaperRecord],
    assignments: &[PercentileAssignment],
    config: &PipelineConfig,
) -> Result<SubjectResult> {
    let attribution = attribute_full_counting(papers.iter().copied(), subject);
    let attribution = apply_thresholds(subject, attribution, config.thresholds)?;
    let table = match &config.class_source {
        ClassSource::Percentiles => tabulate_clusters(subject, assignments, &attribution)?,
        ClassSource::Precomputed(flags) => tabulate_with(subject, &attribution, |pid| {
            flags.get(&(subject.to_string(), pid.to_string())).copied()
        })?,
    };
    let fit = fit_model(
        &table,
        FitOptions {
            nodes: config.quad_nodes,
            ..FitOptions::default()
        },
    )?;
    let wald = wald_test(&fit)?;
    let estimates = estimate_institutions(&fit, &table)?;
    let institutions = estimates
        .iter()
        .map(|e| {
            let inst = corpus
                .institution(&e.institution_id)
                .expect("corpus validation resolves every affiliation");
            ExportedInstitution::from_estimate(e, inst)
        })
        .collect::<Vec<_>>();
    Ok(SubjectResult {
        subject: subject.to_string(),
        subject_name: display_name(subject),
        n_institutions: institutions.len(),
        model: ModelSummary {
            beta0: fit.params.beta0,
            sigma2: fit.sigma2(),
            se_beta0: fit.se_beta0,
            se_sigma2: fit.se_sigma2,
            icc: fit.icc,
            wald_z: wald.z,
            wald_p: wald.p,
            ranking_reasonable: wald.significant,
            grand_mean_prob: fit.grand_mean_prob,
            mean_raw_proportion: table.mean_raw_proportion,
            loglik: fit.loglik,
            converged: fit.converged,
            goldstein_mean_test_level: goldstein_mean_test_level(),
        },
        institutions,
    })
}

/// Reads a `paper_id,subject,is_class10` table.
pub fn parse_flags<R: Read>(source: R) -> Result<HashMap<(String, String), bool>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut out = HashMap::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx + 2;
        let row = row.map_err(|e| ParseError::new(line, "<row>", e.to_string()))?;
        let get = |i: usize, name: &str| {
            row.get(i)
                .ok_or_else(|| ParseError::new(line, name, "missing column"))
        };
        let flag = match get(2, "is_class10")? {
            "true" | "1" => true,
            "false" | "0" => false,
            other => {
                return Err(ParseError::new(line, "is_class10", format!("not a boolean: `{other}`")).into())
            }
        };
        out.insert(
            (get(1, "subject")?.to_string(), get(0, "paper_id")?.to_string()),
            flag,
        );
    }
    Ok(out)
}
