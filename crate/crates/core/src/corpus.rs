//! Paper and institution records, input parsing, full-counting attribution and
//! the per-subject inclusion thresholds.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocType {
    Article,
    Review,
    ConferencePaper,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::Article => "article",
            DocType::Review => "review",
            DocType::ConferencePaper => "conference_paper",
        }
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DocType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "article" => Ok(DocType::Article),
            "review" => Ok(DocType::Review),
            "conference_paper" => Ok(DocType::ConferencePaper),
            other => Err(format!(
                "unknown document type `{other}` (expected article, review or conference_paper)"
            )),
        }
    }
}

/// One publication with its pre-counted citations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub year: i32,
    pub doc_type: DocType,
    pub subject_areas: BTreeSet<String>,
    pub citations: u64,
    pub journal_sjr2: f64,
    pub affiliations: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstitutionRecord {
    pub institution_id: String,
    pub name: String,
    pub country: String,
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperFormat {
    Jsonl,
    Csv,
}

impl FromStr for PaperFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(PaperFormat::Jsonl),
            "csv" => Ok(PaperFormat::Csv),
            other => Err(format!("unknown paper format `{other}`")),
        }
    }
}

/// Wire shape of a paper row before validation. Integers are signed so that a
/// negative count is reported as an invariant violation on its field.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaper {
    paper_id: String,
    year: i64,
    doc_type: String,
    subject_areas: Vec<String>,
    citations: i64,
    journal_sjr2: f64,
    affiliations: Vec<String>,
}

impl RawPaper {
    fn validate(self, line: usize) -> std::result::Result<PaperRecord, ParseError> {
        if self.paper_id.trim().is_empty() {
            return Err(ParseError::new(line, "paper_id", "must not be empty"));
        }
        let year = i32::try_from(self.year)
            .map_err(|_| ParseError::new(line, "year", format!("out of range: {}", self.year)))?;
        let doc_type = self
            .doc_type
            .parse::<DocType>()
            .map_err(|e| ParseError::new(line, "doc_type", e))?;
        if self.citations < 0 {
            return Err(ParseError::new(
                line,
                "citations",
                format!("must be non-negative, got {}", self.citations),
            ));
        }
        if !self.journal_sjr2.is_finite() || self.journal_sjr2 < 0.0 {
            return Err(ParseError::new(
                line,
                "journal_sjr2",
                format!("must be a non-negative number, got {}", self.journal_sjr2),
            ));
        }
        let subject_areas = clean_set(self.subject_areas);
        if subject_areas.is_empty() {
            return Err(ParseError::new(line, "subject_areas", "must not be empty"));
        }
        let affiliations = clean_set(self.affiliations);
        if affiliations.is_empty() {
            return Err(ParseError::new(line, "affiliations", "must not be empty"));
        }
        Ok(PaperRecord {
            paper_id: self.paper_id,
            year,
            doc_type,
            subject_areas,
            citations: self.citations as u64,
            journal_sjr2: self.journal_sjr2,
            affiliations,
        })
    }
}

fn clean_set(items: Vec<String>) -> BTreeSet<String> {
    items
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Parses papers from JSONL (one object per line) or CSV. In CSV the list
/// columns `subject_areas` and `affiliations` are `;`-separated.
pub fn parse_papers<R: Read>(source: R, format: PaperFormat) -> Result<Vec<PaperRecord>> {
    let mut papers = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |paper: PaperRecord| -> Result<()> {
        if !seen.insert(paper.paper_id.clone()) {
            return Err(Error::DuplicateId {
                kind: "paper",
                id: paper.paper_id,
            });
        }
        papers.push(paper);
        Ok(())
    };

    match format {
        PaperFormat::Jsonl => {
            let reader = std::io::BufReader::new(source);
            for (idx, line) in reader.lines().enumerate() {
                let line_no = idx + 1;
                let line = line.map_err(|e| ParseError::new(line_no, "<line>", e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawPaper = serde_json::from_str(&line)
                    .map_err(|e| ParseError::new(line_no, json_error_field(&e), e.to_string()))?;
                push(raw.validate(line_no)?)?;
            }
        }
        PaperFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
            let headers = reader.headers()?.clone();
            for (idx, record) in reader.records().enumerate() {
                // header is line 1
                let line_no = idx + 2;
                let record = record.map_err(|e| ParseError::new(line_no, "<row>", e.to_string()))?;
                let field = |name: &str| -> std::result::Result<&str, ParseError> {
                    headers
                        .iter()
                        .position(|h| h == name)
                        .and_then(|i| record.get(i))
                        .ok_or_else(|| ParseError::new(line_no, name, "missing column"))
                };
                let num = |name: &str| -> std::result::Result<i64, ParseError> {
                    let v = field(name)?;
                    v.parse()
                        .map_err(|_| ParseError::new(line_no, name, format!("not an integer: `{v}`")))
                };
                let list = |name: &str| -> std::result::Result<Vec<String>, ParseError> {
                    Ok(field(name)?.split(';').map(str::to_string).collect())
                };
                let sjr = field("journal_sjr2")?;
                let raw = RawPaper {
                    paper_id: field("paper_id")?.to_string(),
                    year: num("year")?,
                    doc_type: field("doc_type")?.to_string(),
                    subject_areas: list("subject_areas")?,
                    citations: num("citations")?,
                    journal_sjr2: sjr.parse().map_err(|_| {
                        ParseError::new(line_no, "journal_sjr2", format!("not a number: `{sjr}`"))
                    })?,
                    affiliations: list("affiliations")?,
                };
                push(raw.validate(line_no)?)?;
            }
        }
    }
    Ok(papers)
}

/// Best-effort extraction of the offending field from a serde_json message.
fn json_error_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "<json>".to_string()
}

/// Parses `institution_id,name,country,latitude,longitude` CSV.
pub fn parse_institutions<R: Read>(source: R) -> Result<Vec<InstitutionRecord>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, row) in reader.deserialize::<InstitutionRecord>().enumerate() {
        let line_no = idx + 2;
        let inst = row.map_err(|e| ParseError::new(line_no, "<row>", e.to_string()))?;
        if inst.institution_id.is_empty() {
            return Err(ParseError::new(line_no, "institution_id", "must not be empty").into());
        }
        if !(-90.0..=90.0).contains(&inst.latitude) {
            return Err(ParseError::new(
                line_no,
                "latitude",
                format!("{} outside [-90, 90]", inst.latitude),
            )
            .into());
        }
        if !(-180.0..=180.0).contains(&inst.longitude) {
            return Err(ParseError::new(
                line_no,
                "longitude",
                format!("{} outside [-180, 180]", inst.longitude),
            )
            .into());
        }
        if !seen.insert(inst.institution_id.clone()) {
            return Err(Error::DuplicateId {
                kind: "institution",
                id: inst.institution_id,
            });
        }
        out.push(inst);
    }
    Ok(out)
}

/// Validated set of papers and institutions. Immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<PaperRecord>,
    institutions: BTreeMap<String, InstitutionRecord>,
    census_year: i32,
}

impl Corpus {
    pub fn new(
        papers: Vec<PaperRecord>,
        institutions: Vec<InstitutionRecord>,
        census_year: i32,
    ) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        for inst in institutions {
            let id = inst.institution_id.clone();
            if by_id.insert(id.clone(), inst).is_some() {
                return Err(Error::DuplicateId {
                    kind: "institution",
                    id,
                });
            }
        }
        let mut seen = HashSet::with_capacity(papers.len());
        for p in &papers {
            if !seen.insert(p.paper_id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "paper",
                    id: p.paper_id.clone(),
                });
            }
            if let Some(missing) = p.affiliations.iter().find(|a| !by_id.contains_key(*a)) {
                return Err(Error::UnknownInstitution {
                    paper_id: p.paper_id.clone(),
                    institution_id: missing.clone(),
                });
            }
        }
        Ok(Self {
            papers,
            institutions: by_id,
            census_year,
        })
    }

    pub fn papers(&self) -> &[PaperRecord] {
        &self.papers
    }

    pub fn institutions(&self) -> impl Iterator<Item = &InstitutionRecord> {
        self.institutions.values()
    }

    pub fn institution(&self, id: &str) -> Option<&InstitutionRecord> {
        self.institutions.get(id)
    }

    pub fn census_year(&self) -> i32 {
        self.census_year
    }

    /// All subject codes present, sorted.
    pub fn subjects(&self) -> BTreeSet<String> {
        self.papers
            .iter()
            .flat_map(|p| p.subject_areas.iter().cloned())
            .collect()
    }

    /// Papers of `subject` published within `[year_min, year_max]`.
    pub fn papers_in(&self, subject: &str, year_min: i32, year_max: i32) -> Vec<&PaperRecord> {
        self.papers
            .iter()
            .filter(|p| p.year >= year_min && p.year <= year_max && p.subject_areas.contains(subject))
            .collect()
    }
}

/// Institution id → ids of the papers attributed to it, in input order.
pub type Attribution = BTreeMap<String, Vec<String>>;

/// Full counting: every affiliated institution receives the whole paper with
/// weight 1. Papers not classified under `subject` are skipped.
pub fn attribute_full_counting<'a, I>(papers: I, subject: &str) -> Attribution
where
    I: IntoIterator<Item = &'a PaperRecord>,
{
    let mut table = Attribution::new();
    for paper in papers {
        if !paper.subject_areas.contains(subject) {
            continue;
        }
        for inst in &paper.affiliations {
            table
                .entry(inst.clone())
                .or_default()
                .push(paper.paper_id.clone());
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    pub min_papers: usize,
    pub min_institutions: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_papers: 500,
            min_institutions: 50,
        }
    }
}

/// Drops institutions with fewer than `min_papers` attributed papers, then
/// rejects the subject if fewer than `min_institutions` remain.
pub fn apply_thresholds(
    subject: &str,
    table: Attribution,
    thresholds: Thresholds,
) -> Result<Attribution> {
    if thresholds.min_papers == 0 || thresholds.min_institutions == 0 {
        return Err(Error::InvalidThreshold(
            "min_papers and min_institutions must be at least 1".into(),
        ));
    }
    let candidates = table.len();
    let kept: Attribution = table
        .into_iter()
        .filter(|(_, papers)| papers.len() >= thresholds.min_papers)
        .collect();
    if kept.len() < thresholds.min_institutions {
        return Err(Error::SubjectRejected {
            subject: subject.to_string(),
            surviving: kept.len(),
            min_institutions: thresholds.min_institutions,
            candidates,
        });
    }
    Ok(kept)
}
