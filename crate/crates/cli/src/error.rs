use std::fmt;

use compgen::coverage::CoverageError;
use compgen::dataset::DatasetError;
use compgen::metrics::MetricsError;
use compgen::scaling::ScalingError;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage = 2,
    Data = 3,
    Capacity = 4,
    Internal = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub error: anyhow::Error,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(category: Category, error: impl Into<anyhow::Error>) -> Self {
        CliError { category, error: error.into() }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        CliError::new(Category::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::new(Category::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        CliError::new(Category::Internal, anyhow::anyhow!("{msg}"))
    }

    pub fn context(self, what: impl fmt::Display) -> Self {
        CliError { category: self.category, error: self.error.context(what.to_string()) }
    }

    pub fn exit_code(&self) -> u8 {
        self.category as u8
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(Category::Data, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new(Category::Data, e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::new(Category::Data, e)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let category = match e {
            DatasetError::Capacity { .. } | DatasetError::DomainTooLarge { .. } => Category::Capacity,
            DatasetError::EmptyTestRequest => Category::Usage,
            _ => Category::Data,
        };
        CliError::new(category, e)
    }
}

impl From<CoverageError> for CliError {
    fn from(e: CoverageError) -> Self {
        CliError::new(Category::Data, e)
    }
}

impl From<ScalingError> for CliError {
    fn from(e: ScalingError) -> Self {
        let category = match e {
            ScalingError::Ceiling { .. } => Category::Capacity,
            ScalingError::TooFewPoints(..) | ScalingError::NonPositive(..) | ScalingError::DegenerateX => {
                Category::Data
            }
            _ => Category::Usage,
        };
        CliError::new(category, e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::new(Category::Data, e)
    }
}

impl From<compgen::task::TaskError> for CliError {
    fn from(e: compgen::task::TaskError) -> Self {
        CliError::new(Category::Usage, e)
    }
}
