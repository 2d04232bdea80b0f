use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point index {index} out of range for a space of {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),

    #[error("pair volume is undefined on the diagonal (i = j = {0})")]
    DiagonalPair(usize),

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("duplicate points {0} and {1} (zero distance between distinct indices)")]
    DuplicatePoints(usize, usize),

    #[error("field has {got} values but the space has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {what} `{name}`")]
    UnknownKind { what: &'static str, name: String },

    #[error("operation `{op}` is not supported on a {metric} space")]
    UnsupportedMetric { op: &'static str, metric: &'static str },

    #[error("cube {index} holds {count} sample points, need at least {required}")]
    SparseCube {
        index: usize,
        count: usize,
        required: usize,
    },

    #[error("dilated cube leaves the sampled domain (lambda = {0})")]
    CubeOutsideDomain(f64),

    #[error("weight is not positive at sample point {index} (value {value})")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("empty ball around point {0}")]
    EmptyBall(usize),

    #[error("ball family is empty after filtering")]
    EmptyFamily,

    #[error("{0}")]
    Config(String),

    #[error("oracle disagreement on {quantity}: engine {engine:e}, oracle {oracle:e} (relative {relative:e})")]
    OracleMismatch {
        quantity: String,
        engine: f64,
        oracle: f64,
        relative: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
