use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is outside the supported range 1..=4")]
    Dimension(usize),

    #[error("anisotropy coefficient theta[{index}] = {value} is outside (0, 1]")]
    Theta { index: usize, value: f64 },

    #[error("{0} is not a power of two")]
    NotDyadic(u64),

    #[error("box radius {radius} cannot hold a projector of support radius {needed}")]
    BoxTooSmall { radius: usize, needed: usize },

    #[error("grid resolution {n} is too coarse, need at least {needed}")]
    GridTooCoarse { n: usize, needed: usize },

    #[error("geometry mismatch between field and operator")]
    GeometryMismatch,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("resource budget exceeded: {requested} cells requested, budget is {budget}")]
    Budget { requested: u128, budget: u128 },

    #[error("exponent {p} is not admissible: {reason}")]
    Exponent { p: f64, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite sample encountered at index {0}")]
    NonFinite(usize),

    #[error("field is not supported on the requested frequency band: {0}")]
    Band(String),

    #[error("Picard iteration is not contracting (ratios {ratios:?})")]
    NotContracting { ratios: Vec<f64> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
