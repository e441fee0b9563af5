use thiserror::Error;

/// A row-level problem in one of the input files.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: field `{field}`: {message}")]
pub struct ParseError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("paper `{paper_id}` is affiliated with unknown institution `{institution_id}`")]
    UnknownInstitution {
        paper_id: String,
        institution_id: String,
    },

    #[error("subject `{subject}` rejected: below min_institutions ({surviving} < {min_institutions})")]
    SubjectRejected {
        subject: String,
        surviving: usize,
        min_institutions: usize,
        /// institutions that had at least one paper before the paper threshold
        candidates: usize,
    },

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("paper `{0}` is attributed to an institution but has no percentile assignment")]
    MissingAssignment(String),

    #[error("invalid cluster table: {0}")]
    InvalidClusterTable(String),

    #[error("numerical failure in cluster {cluster}: {message}")]
    Numerical { cluster: usize, message: String },

    #[error(
        "degenerate outcome: every institution has {} class-10% papers; the intercept is not identified",
        if *all_top { "only" } else { "no" }
    )]
    DegenerateOutcome { all_top: bool },

    #[error("Wald test undefined: standard error of the variance is zero")]
    UndefinedWaldTest,

    #[error("Wald test requires a converged fit")]
    NotConverged,

    #[error("cannot compare institutions from different subjects (`{0}` vs `{1}`)")]
    CrossSubject(String, String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
