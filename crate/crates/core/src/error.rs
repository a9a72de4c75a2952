use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::planner::{FieldError, FilterEcho};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed delimited text: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: malformed document: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("{}: no parseable rows", path.display())]
    EmptyInput { path: PathBuf },

    #[error("geometry error in `{feature}`: {message}")]
    Geometry { feature: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid planner input: {}", format_field_errors(.0))]
    InvalidInput(Vec<FieldError>),

    #[error("no trips match this plan ({filters})")]
    NoMatchingTrips { filters: FilterEcho },

    #[error("invalid subset statistics: {0}")]
    InvalidStats(String),

    #[error("no pings on {date}; pings exist on {}", format_dates(.available))]
    EmptyDay {
        date: NaiveDate,
        available: Vec<NaiveDate>,
    },

    #[error("unsupported probe schema `{found}` (expected `{expected}`)")]
    Version { found: String, expected: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_field_errors(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("{}: {}", e.field, e.message))
        .collect::<Vec<_>>()
        .join("; ")
}

fn format_dates(dates: &[NaiveDate]) -> String {
    if dates.is_empty() {
        return "no dates".to_string();
    }
    dates
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
