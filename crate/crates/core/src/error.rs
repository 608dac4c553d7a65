use thiserror::Error;

/// Errors raised by estimation, inference and the command-line front end.
#[derive(Debug, Error)]
pub enum LroError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The largest distinct `y` does not exceed the smallest distinct `x`, so
    /// no observation from the first sample lies below one from the second.
    #[error(
        "degenerate order: largest y value ({y_max}) <= smallest x value ({x_min}); \
         the estimator requires some X_i < Y_j"
    )]
    DegenerateOrder { x_min: f64, y_max: f64 },

    #[error("{x} is outside the domain ({lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("variance undefined at z = {0}: estimated G mass is zero")]
    UndefinedVariance(f64),

    #[error("nuisance estimate undefined at z = {z}: {reason}")]
    UndefinedNuisance { z: f64, reason: String },

    #[error("unsupported evaluation point z = {z}: {reason}")]
    UnsupportedPoint { z: f64, reason: String },

    #[error("no quantile for level {0} in the {1} table")]
    MissingQuantile(f64, &'static str),

    #[error("{0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LroError>;
