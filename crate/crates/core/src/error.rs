use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Configuration text failed to parse.
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// A parsed configuration violates an invariant.
    #[error("config validation error: {0}")]
    ConfigInvalid(String),

    /// A position left the valid sampling region (domain plus one ghost layer).
    #[error("position ({0}, {1}, {2}) outside domain and ghost region")]
    OutOfDomain(f64, f64, f64),

    /// Non-finite value encountered where finite input is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Particle velocity reached or exceeded the speed of light.
    #[error("particle velocity {v} >= c = {c}; time step too large")]
    Superluminal { v: f64, c: f64 },

    /// Linear solver failed to reach tolerance.
    #[error("field solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged { residual: f64, iterations: usize },

    /// Particle-control request cannot be satisfied.
    #[error("particle control: {0}")]
    Control(String),

    /// Mixture fitting preconditions violated or fit degenerated.
    #[error("mixture fit: {0}")]
    MixtureFit(String),

    /// Histogram geometry mismatch between operands.
    #[error("histogram geometry mismatch: {0}")]
    GeometryMismatch(String),

    /// Binary archive or checkpoint format violation.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
