use thiserror::Error;

pub type Result<T, E = TsvcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TsvcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("design matrix is rank deficient; collinear columns: {columns:?}")]
    RankDeficient { columns: Vec<usize> },

    #[error("partition {leaf} of covariate {covariate} holds no observations")]
    DegenerateDesign { covariate: usize, leaf: usize },

    #[error("operation not supported for the {0} family")]
    UnsupportedFamily(&'static str),

    #[error("need more observations than parameters (n = {n}, q = {q})")]
    InsufficientDegreesOfFreedom { n: usize, q: usize },

    #[error(
        "{replicates} bootstrap replicates is too few for level {level}; need at least {required}"
    )]
    InsufficientReplicates {
        replicates: usize,
        required: usize,
        level: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse value {value:?} at row {row}, column {column:?}")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("input file has no data rows")]
    EmptyFile,

    #[error("unsupported document schema version {found:?} (expected {expected:?})")]
    SchemaVersion { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
