use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("problem validation failed: {0}")]
    Validation(String),

    #[error("simulation fault at t={time}: {message}")]
    Simulation { time: f64, message: String },

    #[error("jump rate {rate} exceeds bound {bound} at t={time}, x={state:?}")]
    Dominance {
        time: f64,
        state: Vec<f64>,
        rate: f64,
        bound: f64,
    },

    #[error("quadrature tolerance {requested:e} not met (achieved {achieved:e}, estimate {estimate})")]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("nested estimation needs {requested} inner paths, cap is {cap}")]
    Budget { requested: u128, cap: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
