use chrono::NaiveDate;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ingest
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{context}: duplicate cell for {date} hour {hour}")]
    DuplicateCell { context: String, date: NaiveDate, hour: u32 },
    #[error("{context}: line {line}: non-numeric value `{value}`")]
    NonNumericValue { context: String, line: usize, value: String },
    #[error("{context}: dates are not contiguous at {date}: {reason}")]
    NonContiguousDates { context: String, date: NaiveDate, reason: String },
    #[error("{context}: line {line}: hour {hour} outside 1..={max}")]
    InvalidHour { context: String, line: usize, hour: i64, max: u32 },
    #[error("malformed day {date}: {hours} hours (expected 23, 24 or 25)")]
    MalformedDay { date: NaiveDate, hours: usize },
    #[error("fuel `{fuel}` has no observation on or before {date}")]
    LeadingGap { fuel: &'static str, date: NaiveDate },
    #[error("fuel `{fuel}` has no observation on or after {date}")]
    TrailingGap { fuel: &'static str, date: NaiveDate },
    #[error("jitter requires a solar panel, got `{0}`")]
    NonSolarPanel(String),
    #[error("panels are not aligned: {0}")]
    MisalignedPanels(String),

    // design
    #[error("window too short: {days} days for max lag {max_lag}")]
    WindowTooShort { days: usize, max_lag: usize },
    #[error("solar regressor requested but the dataset has no solar panel")]
    SolarUnavailable,
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("window {start}..={end} is outside the data range")]
    WindowOutOfRange { start: NaiveDate, end: NaiveDate },
    #[error("series {index} has zero variance")]
    DegenerateSeries { index: usize },

    // estimate
    #[error("design is rank deficient (relative singular value {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("insufficient sample: n = {n} rows for m = {m} regressors")]
    InsufficientSample { n: usize, m: usize },
    #[error("prior is not positive definite: {0}")]
    NonPdPrior(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("predictive degrees of freedom too small: nu = {nu}, q = {q}")]
    DofTooSmall { nu: f64, q: usize },
    #[error("density has no dimensions or invalid draw count {0}")]
    EmptyDensity(usize),

    // backtest
    #[error("plan out of range: {0}")]
    PlanOutOfRange(String),
    #[error("model `{model}` failed for target date {date}: {source}")]
    FitFailure {
        model: String,
        date: NaiveDate,
        #[source]
        source: Box<Error>,
    },
    #[error("forecast records are misaligned: {0}")]
    MisalignedRecords(String),

    // metrics
    #[error("empty error matrix")]
    EmptyErrors,
    #[error("negative standard deviation {0}")]
    NegativeSd(f64),
    #[error("need at least 2 draws, got {0}")]
    TooFewDraws(usize),
    #[error("loss series length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate losses: {0}")]
    DegenerateLosses(String),

    // synthetic
    #[error("explosive DGP: companion spectral radius {0:.4} >= 1")]
    ExplosiveDgp(f64),

    // config / io
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for failures of the numerical core (as opposed to bad input or config).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::RankDeficient { .. }
            | Error::InsufficientSample { .. }
            | Error::NonPdPrior(_)
            | Error::DofTooSmall { .. }
            | Error::DegenerateSeries { .. }
            | Error::DegenerateLosses(_)
            | Error::ExplosiveDgp(_) => true,
            Error::FitFailure { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv { path: path.into(), source }
    }
}
