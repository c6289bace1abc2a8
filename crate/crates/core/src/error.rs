use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which end of the no-arbitrage band a put price violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceBound {
    /// At or below the intrinsic value `max(K e^{-rT} - S, 0)`.
    Lower,
    /// At or above the discounted strike `K e^{-rT}`.
    Upper,
}

impl std::fmt::Display for PriceBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriceBound::Lower => f.write_str("lower (intrinsic value)"),
            PriceBound::Upper => f.write_str("upper (discounted strike)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("non-finite value at step {step}")]
    NonFinitePath { step: usize },

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("backward step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("path {path_index} failed: {source}")]
    Path {
        path_index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("point {x} outside grid [{x_min}, {x_max}]")]
    OutOfRange { x: f64, x_min: f64, x_max: f64 },

    #[error("price {price} violates the {bound} no-arbitrage bound {limit}")]
    PriceOutOfBand {
        price: f64,
        bound: PriceBound,
        limit: f64,
    },

    #[error("non-finite aggregate: {0}")]
    NonFiniteAggregate(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("row `{row}`: {source}")]
    Row {
        row: String,
        #[source]
        source: Box<Error>,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
