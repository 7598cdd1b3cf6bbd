use thiserror::Error;

/// Errors produced by the model, statistics and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("efficiency out of range: {0}")]
    EfficiencyOutOfRange(f64),

    #[error("visibility out of range: {0}")]
    VisibilityOutOfRange(f64),

    #[error("clipping parameter out of range: {0}")]
    ClippingOutOfRange(f64),

    #[error("model family cannot reach V = {v} at efficiency {eta}")]
    UnreachableVisibility { eta: f64, v: f64 },

    #[error("inadmissible model parameters: {0}")]
    InadmissibleModel(String),

    #[error("internal contradiction: {0}")]
    InternalContradiction(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}, S = {objective:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        objective: f64,
        last_iterate: Vec<f64>,
    },

    #[error("empty data")]
    EmptyData,

    #[error("invalid rate series: {0}")]
    InvalidRates(String),

    #[error("even n required for the cosine interpolation (got n = {0})")]
    EvenNRequired(usize),

    #[error("missing angle {0} rad in the rate series")]
    MissingAngle(f64),

    #[error("degenerate rates: {0}")]
    DegenerateRates(String),

    #[error("inconsistent data shapes: {0}")]
    ShapeMismatch(String),

    #[error("channel functions overlap: P+ + P- = {0} > 1")]
    ChannelOverlap(f64),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
