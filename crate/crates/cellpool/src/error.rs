use std::fmt;

/// Crate-wide error type. Numerical failures carry their best estimate so
/// callers can decide whether a degraded result is still usable.
#[derive(Debug)]
pub enum Error {
    /// A parameter violated its documented precondition.
    InvalidParameter { name: &'static str, message: String },
    /// Adaptive quadrature hit the subdivision cap before reaching the
    /// requested tolerance. `best` is the estimate at that point.
    QuadratureDidNotConverge {
        best: f64,
        error_estimate: f64,
        tolerance: f64,
    },
    /// Too few Monte Carlo samples to form the requested estimate.
    SampleBudget { needed: u64, given: u64 },
    /// A user has no base station it is allowed to associate with.
    NoCandidateBs { user_id: usize },
    /// CSV layout file could not be parsed.
    CsvParse { line: u64, message: String },
    /// CSV header did not match any supported layout schema.
    UnknownHeader { found: String },
    /// Scenario configuration failed validation; every problem is listed.
    ConfigSchema { problems: Vec<String> },
    /// A dimensioned config value was missing or had an unusable unit suffix.
    UnitParse { field: String, message: String },
    /// An output or report was requested from empty data.
    EmptyReport,
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, message } => {
                write!(f, "invalid parameter `{name}`: {message}")
            }
            Error::QuadratureDidNotConverge {
                best,
                error_estimate,
                tolerance,
            } => write!(
                f,
                "quadrature did not converge: best estimate {best:.12e}, \
                 error {error_estimate:.3e} > tolerance {tolerance:.3e}"
            ),
            Error::SampleBudget { needed, given } => {
                write!(f, "sample budget too small: need at least {needed}, got {given}")
            }
            Error::NoCandidateBs { user_id } => {
                write!(f, "user {user_id} has no candidate base station")
            }
            Error::CsvParse { line, message } => {
                write!(f, "layout CSV parse error at line {line}: {message}")
            }
            Error::UnknownHeader { found } => write!(
                f,
                "unknown layout CSV header `{found}` \
                 (expected `operator,x_m,y_m` or `operator,lat,lon`)"
            ),
            Error::ConfigSchema { problems } => {
                write!(f, "configuration invalid: {}", problems.join("; "))
            }
            Error::UnitParse { field, message } => {
                write!(f, "cannot parse `{field}`: {message}")
            }
            Error::EmptyReport => write!(f, "report contains no data"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        message: message.into(),
    }
}
