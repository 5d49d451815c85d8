use thiserror::Error;

/// Errors raised by the solver and its configuration layer.
#[derive(Debug, Error)]
pub enum DgError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("point {x} lies outside the domain [{a}, {b}]")]
    OutOfDomain { x: f64, a: f64, b: f64 },

    #[error("non-finite value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("Poisson operator is singular (block {block}); the flux parameters are inadmissible")]
    SingularOperator { block: usize },

    #[error("concentration of species {species} is non-positive ({value:e}) at a quadrature node of cell {cell}")]
    NonPositive { species: usize, cell: usize, value: f64 },

    #[error("cell average {average:e} of species {species} in cell {cell} does not exceed the floor {floor:e} at step {step}")]
    AveragePositivityLost {
        species: usize,
        cell: usize,
        step: usize,
        average: f64,
        floor: f64,
    },

    #[error("solver failed at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<DgError>,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl DgError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        DgError::Config(msg.into())
    }

    /// Strips any time-stamp wrapper and returns the underlying failure.
    pub fn root(&self) -> &DgError {
        match self {
            DgError::AtTime { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, DgError>;
