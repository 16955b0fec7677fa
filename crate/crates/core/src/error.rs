use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: condition `{condition}` violated: {detail}")]
    InvalidPartition { condition: &'static str, detail: String },

    #[error("level {level} is out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("interval [{lo}, {hi}] is not contained in the window [{a}, {b}]")]
    OutsideWindow { lo: f64, hi: f64, a: f64, b: f64 },

    #[error("evaluation point {x} coincides with a breakpoint of the piecewise polynomial")]
    PointOnBreakpoint { x: f64 },

    #[error("nested structure has {size} indices; exhaustive search supports at most {max}")]
    StructureTooLarge { size: usize, max: usize },

    #[error("unknown function id `{id}`; available: {available}")]
    UnknownFunction { id: String, available: String },

    #[error("malformed input at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter { name, detail: detail.into() }
}
