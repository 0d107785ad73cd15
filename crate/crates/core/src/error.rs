use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("histogram has fewer than two occupied levels")]
    DegenerateHistogram,
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("unsupported element type `{0}`")]
    UnsupportedElementType(String),
    #[error("manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },
    #[error("empty region: {0}")]
    EmptyRegion(&'static str),
    #[error("degenerate intensity range: low reference {lo} >= high reference {hi}")]
    DegenerateRange { lo: f64, hi: f64 },
    #[error("spacing error: {0}")]
    Spacing(String),
    #[error("invalid phantom spec: {0}")]
    Spec(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("only one class present")]
    SingleClass,
    #[error("a class has no samples")]
    EmptyClass,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("target sensitivity {0} is unachievable")]
    Unachievable(f64),
    #[error("case has no ground truth scar")]
    NoGroundTruth,
    #[error("empty mask: {0}")]
    EmptyMask(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("masks are not aligned")]
    Alignment,
    #[error("empty denominator: {0}")]
    EmptyDenominator(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format { path: path.into(), msg: msg.into() }
    }

    pub(crate) fn manifest(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Manifest { path: path.into(), msg: msg.into() }
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::DegenerateHistogram
                | Error::DegenerateData(_)
                | Error::DegenerateRange { .. }
                | Error::ZeroVariance
                | Error::Unachievable(_)
        )
    }
}
