use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("point {index} outside grid")]
    PointOutsideGrid { index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not enough points: need {needed}, have {have}")]
    NotEnoughPoints { needed: usize, have: usize },

    #[error("degenerate cloud: {0}")]
    DegenerateCloud(String),

    #[error("no feasible candidate among {} evaluated", .reports.len())]
    NoFeasibleCandidate {
        reports: Vec<crate::autoselect::CandidateReport>,
    },

    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "empty_input",
            Error::PointOutsideGrid { .. } => "point_outside_grid",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotEnoughPoints { .. } => "not_enough_points",
            Error::DegenerateCloud(_) => "degenerate_cloud",
            Error::NoFeasibleCandidate { .. } => "no_feasible_candidate",
            Error::DegreeMismatch(..) => "degree_mismatch",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
