//! Crate-wide error type.

/// Errors surfaced by the geometry, field, and solver layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar argument left the domain of a closed-form kernel.
    #[error("domain violation in {what}: argument {value}")]
    Domain { what: &'static str, value: f64 },

    /// The fiber norm hit the degeneration guard of the hyperkähler metric.
    #[error("metric degeneration: |xi|_g = {xi_norm:.6} exceeds guard {guard:.6} (delta0 = {delta0})")]
    MetricDegeneration {
        xi_norm: f64,
        guard: f64,
        delta0: f64,
    },

    /// A base point left the ball chart.
    #[error("chart exit: |q| = {norm:.6} outside the unit ball (margin {margin:.3})")]
    ChartExit { norm: f64, margin: f64 },

    /// Dimension/shape mismatch between containers.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A dense factorization or solve failed.
    #[error("linear algebra failure: {0}")]
    Linalg(&'static str),

    /// An iterative solver ran out of iterations.
    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// An estimate check was asked to certify something outside its
    /// hypotheses (non-solution input, parameter outside the admissible
    /// range). The message spells out the violated precondition.
    #[error("estimate precondition: {0}")]
    Precondition(String),

    /// Malformed snapshot bytes or incompatible header.
    #[error("snapshot format: {0}")]
    Snapshot(String),

    /// Invalid configuration value (estimate battery, solver, flow).
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
