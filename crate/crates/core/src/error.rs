use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Each variant has a stable machine-readable code (see [`Error::code`]) that
/// the CLI and the C ABI expose unchanged.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{field}`: {left} vs {right}")]
    DimMismatch {
        field: &'static str,
        left: String,
        right: String,
    },
    #[error("label mode mismatch: {left:?} vs {right:?}")]
    ModeMismatch {
        left: crate::datamodel::LabelMode,
        right: crate::datamodel::LabelMode,
    },
    #[error("class set mismatch in `{field}`: {detail}")]
    ClassSetMismatch { field: &'static str, detail: String },
    #[error("invalid value for `{field}`: {detail}")]
    InvalidValue { field: &'static str, detail: String },
    #[error("boundary width must be >= 1, got {0}")]
    BadWidth(usize),
    #[error("patch size must be >= 1, got {0}")]
    BadPatch(usize),
    #[error("surface tolerance must be finite and > 0, got {0}")]
    BadTolerance(f64),
    #[error("empty map")]
    EmptyMap,
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("risk value {value} at index {index} is outside [0, 1]")]
    RiskOutOfRange { index: usize, value: f64 },
    #[error("non-finite input in `{0}`")]
    NonFiniteInput(&'static str),
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("too few rows: need at least {needed}, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("covariance is singular after ridge regularisation")]
    SingularAfterRidge,
    #[error("feature schema mismatch: expected {expected:?}, got {got:?}")]
    SchemaMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },
    #[error("normalisation is degenerate: random and optimal AURC are both {0}")]
    NormalizationDegenerate(f64),
    #[error("input is constant; correlation is undefined")]
    ConstantInput,
    #[error("labels contain a single class; AUROC is undefined")]
    SingleClass,
    #[error("misaligned cases: {0}")]
    MisalignedCases(String),
    #[error("fold {0} has no cases")]
    EmptyFold(usize),

    #[error("{path}: not an NPY file (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported NPY content: {detail}")]
    UnsupportedDtype { path: PathBuf, detail: String },
    #[error("{path}: Fortran-ordered arrays are not supported")]
    FortranOrderUnsupported { path: PathBuf },
    #[error("{path}: value {value} outside the allowed range {range}")]
    ValueOutOfRange {
        path: PathBuf,
        value: f64,
        range: &'static str,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: duplicate case `{case_id}` in fold {fold}")]
    DuplicateCase {
        path: PathBuf,
        row: usize,
        case_id: String,
        fold: usize,
    },
    #[error("{path}: row {row}: cannot resolve `{target}`")]
    UnresolvedPath {
        path: PathBuf,
        row: usize,
        target: PathBuf,
    },
    #[error("{path}: row {row}: {detail}")]
    BadRow {
        path: PathBuf,
        row: usize,
        detail: String,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Stable upper-case identifier for this error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimMismatch { .. } => "DIM_MISMATCH",
            Error::ModeMismatch { .. } => "MODE_MISMATCH",
            Error::ClassSetMismatch { .. } => "CLASS_SET_MISMATCH",
            Error::InvalidValue { .. } => "INVALID_VALUE",
            Error::BadWidth(_) => "BAD_WIDTH",
            Error::BadPatch(_) => "BAD_PATCH",
            Error::BadTolerance(_) => "BAD_TOLERANCE",
            Error::EmptyMap => "EMPTY_MAP",
            Error::EmptyInput => "EMPTY_INPUT",
            Error::LengthMismatch { .. } => "LENGTH_MISMATCH",
            Error::RiskOutOfRange { .. } => "RISK_OUT_OF_RANGE",
            Error::NonFiniteInput(_) => "NONFINITE_INPUT",
            Error::TooFewSamples { .. } => "TOO_FEW_SAMPLES",
            Error::TooFewRows { .. } => "TOO_FEW_ROWS",
            Error::SingularAfterRidge => "SINGULAR_AFTER_RIDGE",
            Error::SchemaMismatch { .. } => "SCHEMA_MISMATCH",
            Error::NormalizationDegenerate(_) => "NORMALIZATION_DEGENERATE",
            Error::ConstantInput => "CONSTANT_INPUT",
            Error::SingleClass => "SINGLE_CLASS",
            Error::MisalignedCases(_) => "MISALIGNED_CASES",
            Error::EmptyFold(_) => "EMPTY_FOLD",
            Error::BadMagic { .. } => "BAD_MAGIC",
            Error::UnsupportedDtype { .. } => "UNSUPPORTED_DTYPE",
            Error::FortranOrderUnsupported { .. } => "FORTRAN_ORDER_UNSUPPORTED",
            Error::ValueOutOfRange { .. } => "VALUE_OUT_OF_RANGE",
            Error::MissingColumn { .. } => "MISSING_COLUMN",
            Error::DuplicateCase { .. } => "DUPLICATE_CASE",
            Error::UnresolvedPath { .. } => "UNRESOLVED_PATH",
            Error::BadRow { .. } => "BAD_ROW",
            Error::Config(_) => "CONFIG",
            Error::Io { .. } => "IO",
            Error::Json { .. } => "JSON",
            Error::Csv { .. } => "CSV",
        }
    }

    pub(crate) fn dims(field: &'static str, left: &[usize], right: &[usize]) -> Self {
        Error::DimMismatch {
            field,
            left: format!("{left:?}"),
            right: format!("{right:?}"),
        }
    }

    pub(crate) fn invalid(field: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidValue {
            field,
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
