use thiserror::Error;

/// Which axis of an iterated integral failed to converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// A plain one-dimensional integral.
    Single,
    /// Outer variable of an iterated integral.
    Outer,
    /// Inner variable of an iterated integral.
    Inner,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Single => f.write_str("single"),
            Axis::Outer => f.write_str("outer"),
            Axis::Inner => f.write_str("inner"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel evaluated at non-positive time t = {0}")]
    NonPositiveTime(f64),

    #[error("derivative order {0} exceeds the supported maximum of 4")]
    UnsupportedOrder(u32),

    #[error(
        "quadrature ({axis} axis) did not reach tolerance: value {value:e}, error estimate {error_estimate:e}"
    )]
    Tolerance {
        value: f64,
        error_estimate: f64,
        axis: Axis,
    },

    #[error("invalid quadrature request: {0}")]
    InvalidQuadrature(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("non-finite density after step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
