//! Stratified citation percentiles and the class-10% flag.
//!
//! Within a stratum (subject × year × document type) papers are ordered by
//! citations ascending; equal counts are ordered by journal SJR2 descending so
//! that the paper from the more prestigious journal sits nearer the top. Papers
//! that still tie form a residual tie group sharing the group's highest
//! percentile. The percentile of rank `r` among `n` papers is `100·(r−1)/n` and
//! a paper is class 10% when its percentile is at least 90.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Attribution, DocType, PaperRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Stratum {
    pub subject: String,
    pub year: i32,
    pub doc_type: DocType,
}

/// Input row for ranking one stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumPaper {
    pub paper_id: String,
    pub citations: u64,
    pub journal_sjr2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPaper {
    pub paper_id: String,
    pub citations: u64,
    pub journal_sjr2: f64,
    /// 1-based position, ascending.
    pub rank: usize,
    /// Index of the residual tie group (equal citations and SJR2).
    pub tie_group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PercentileAssignment {
    pub paper_id: String,
    pub stratum: Stratum,
    pub rank: usize,
    pub percentile: f64,
    pub is_class10: bool,
}

fn stratum_order(a: &StratumPaper, b: &StratumPaper) -> Ordering {
    a.citations
        .cmp(&b.citations)
        .then_with(|| a.journal_sjr2.total_cmp(&b.journal_sjr2))
        .then_with(|| a.paper_id.cmp(&b.paper_id))
}

fn same_key(a: &StratumPaper, b: &StratumPaper) -> bool {
    a.citations == b.citations && a.journal_sjr2.total_cmp(&b.journal_sjr2) == Ordering::Equal
}

/// Orders a stratum ascending and marks residual tie groups.
pub fn rank_stratum(mut papers: Vec<StratumPaper>) -> Vec<RankedPaper> {
    papers.sort_by(stratum_order);
    let mut out: Vec<RankedPaper> = Vec::with_capacity(papers.len());
    let mut group = 0usize;
    for (i, p) in papers.iter().enumerate() {
        if i > 0 && !same_key(&papers[i - 1], p) {
            group += 1;
        }
        out.push(RankedPaper {
            paper_id: p.paper_id.clone(),
            citations: p.citations,
            journal_sjr2: p.journal_sjr2,
            rank: i + 1,
            tie_group: group,
        });
    }
    out
}

/// `10·(r−1) ≥ 9·n`, i.e. `100·(r−1)/n ≥ 90` without rounding error.
fn is_top_decile(rank: usize, n: usize) -> bool {
    10 * (rank - 1) >= 9 * n
}

/// Percentiles for a ranked stratum. Members of a tie group take the
/// percentile of the group's highest rank.
pub fn assign_percentiles(ranked: &[RankedPaper], stratum: &Stratum) -> Vec<PercentileAssignment> {
    let n = ranked.len();
    let mut group_max: HashMap<usize, usize> = HashMap::new();
    for p in ranked {
        let e = group_max.entry(p.tie_group).or_insert(p.rank);
        *e = (*e).max(p.rank);
    }
    ranked
        .iter()
        .map(|p| {
            let effective = group_max[&p.tie_group];
            PercentileAssignment {
                paper_id: p.paper_id.clone(),
                stratum: stratum.clone(),
                rank: p.rank,
                percentile: 100.0 * (effective - 1) as f64 / n as f64,
                is_class10: is_top_decile(effective, n),
            }
        })
        .collect()
}

/// Splits `papers` into strata of `subject` and assigns percentiles to each.
/// Strata are processed in parallel; the output is ordered by stratum key and
/// then by rank.
pub fn assign_subject<'a, I>(papers: I, subject: &str) -> Vec<PercentileAssignment>
where
    I: IntoIterator<Item = &'a PaperRecord>,
{
    let mut strata: BTreeMap<Stratum, Vec<StratumPaper>> = BTreeMap::new();
    for p in papers {
        if !p.subject_areas.contains(subject) {
            continue;
        }
        strata
            .entry(Stratum {
                subject: subject.to_string(),
                year: p.year,
                doc_type: p.doc_type,
            })
            .or_default()
            .push(StratumPaper {
                paper_id: p.paper_id.clone(),
                citations: p.citations,
                journal_sjr2: p.journal_sjr2,
            });
    }
    let per_stratum: Vec<Vec<PercentileAssignment>> = strata
        .into_par_iter()
        .map(|(stratum, members)| assign_percentiles(&rank_stratum(members), &stratum))
        .collect();
    per_stratum.into_iter().flatten().collect()
}

/// Per-institution counts feeding the multilevel model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClusterRow {
    pub institution_id: String,
    /// papers attributed (n_j)
    pub n: u64,
    /// class-10% papers attributed (k_j)
    pub k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterTable {
    pub subject: String,
    pub rows: Vec<ClusterRow>,
    /// Unweighted mean of k_j/n_j.
    pub mean_raw_proportion: f64,
}

impl ClusterTable {
    pub fn new(subject: impl Into<String>, rows: Vec<ClusterRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidClusterTable("no clusters".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.n == 0 || r.k > r.n) {
            return Err(Error::InvalidClusterTable(format!(
                "institution `{}` has k={} and n={}",
                r.institution_id, r.k, r.n
            )));
        }
        let mean_raw_proportion =
            rows.iter().map(|r| r.k as f64 / r.n as f64).sum::<f64>() / rows.len() as f64;
        Ok(Self {
            subject: subject.into(),
            rows,
            mean_raw_proportion,
        })
    }

    /// Builds a table from bare `(n, k)` pairs, naming clusters by index.
    pub fn from_counts(subject: impl Into<String>, counts: &[(u64, u64)]) -> Result<Self> {
        let rows = counts
            .iter()
            .enumerate()
            .map(|(i, &(n, k))| ClusterRow {
                institution_id: format!("C{i:04}"),
                n,
                k,
            })
            .collect();
        Self::new(subject, rows)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Counts `n_j` and `k_j` for each attributed institution.
pub fn tabulate_clusters(
    subject: &str,
    assignments: &[PercentileAssignment],
    attribution: &Attribution,
) -> Result<ClusterTable> {
    let flags: HashMap<&str, bool> = assignments
        .iter()
        .map(|a| (a.paper_id.as_str(), a.is_class10))
        .collect();
    tabulate_with(subject, attribution, |pid| flags.get(pid).copied())
}

/// Like [`tabulate_clusters`] with the class-10% flag supplied by `flag_of`.
pub fn tabulate_with<F>(subject: &str, attribution: &Attribution, flag_of: F) -> Result<ClusterTable>
where
    F: Fn(&str) -> Option<bool>,
{
    let mut rows = Vec::with_capacity(attribution.len());
    for (inst, papers) in attribution {
        let mut k = 0u64;
        for pid in papers {
            match flag_of(pid) {
                Some(true) => k += 1,
                Some(false) => {}
                None => return Err(Error::MissingAssignment(pid.clone())),
            }
        }
        rows.push(ClusterRow {
            institution_id: inst.clone(),
            n: papers.len() as u64,
            k,
        });
    }
    ClusterTable::new(subject, rows)
}

/// Writes `paper_id,subject,year,doc_type,rank,percentile,is_class10` rows.
pub fn write_assignments_csv<W: Write>(out: W, assignments: &[PercentileAssignment]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["paper_id", "subject", "year", "doc_type", "rank", "percentile", "is_class10"])?;
    for a in assignments {
        w.write_record([
            a.paper_id.as_str(),
            a.stratum.subject.as_str(),
            &a.stratum.year.to_string(),
            a.stratum.doc_type.as_str(),
            &a.rank.to_string(),
            &format!("{:.6}", a.percentile),
            if a.is_class10 { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<assignments>".into(),
        source: e,
    })?;
    Ok(())
}
