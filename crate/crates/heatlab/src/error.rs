//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants carry enough
//! context to print a one-line diagnosis; they deliberately avoid holding
//! graph references so errors stay `Send + 'static`.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge ({u}, {v}) has non-positive or non-finite weight {w}")]
    NonPositiveWeight { u: usize, v: usize, w: f64 },

    #[error("self-loop at vertex {v}")]
    SelfLoop { v: usize },

    #[error("edge ({u}, {v}) listed twice with conflicting weights {w1} and {w2}")]
    ConflictingDuplicateEdge { u: usize, v: usize, w1: f64, w2: f64 },

    #[error("graph is disconnected: reached {reached} of {total} vertices from vertex 0")]
    DisconnectedGraph { reached: usize, total: usize },

    #[error("vertex {v} out of range (graph has {n} vertices)")]
    VertexOutOfRange { v: usize, n: usize },

    #[error("radius order violated: inner {r} must be strictly below outer {outer}")]
    RadiusOrderViolation { r: u32, outer: u32 },

    #[error("source vertex {vertex} lies outside the requested domain")]
    SourceOutsideDomain { vertex: usize },

    #[error("kernel time mismatch: expected {expected}, got {got}")]
    TimeMismatch { expected: u32, got: u32 },

    #[error("shape mismatch: {what}")]
    ShapeMismatch { what: String },

    #[error("singular system: {what}")]
    SingularSystem { what: String },

    #[error("terminal sets overlap (first shared vertex {v})")]
    OverlappingTerminals { v: usize },

    #[error("{what} is empty")]
    EmptyVertexSet { what: String },

    #[error("linear solver diverged: residual {residual:e} after {iterations} iterations")]
    SolverDivergence { residual: f64, iterations: usize },

    #[error("eigen iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error(
        "ball of radius {radius} at vertex {center} reaches the truncation boundary (depth {depth})"
    )]
    TruncationViolation { center: usize, radius: u32, depth: u32 },

    #[error("value {n} lies beyond the tabulated range (max {max})")]
    OutOfTabulatedRange { n: f64, max: f64 },

    #[error("insufficient grid: {what}")]
    InsufficientGrid { what: String },

    #[error("{what} too small: {value} (minimum {min})")]
    SizeTooSmall { what: String, value: u64, min: u64 },

    #[error("level {level} exceeds the configured cap {cap}")]
    LevelTooLarge { level: u32, cap: u32 },

    #[error("fitted beta-prime {beta_prime} <= 1, sub-Gaussian lower profile not applicable")]
    NotApplicableBetaPrime { beta_prime: f64 },

    #[error("config constraint violated: {what}")]
    ConfigOrderViolation { what: String },

    #[error("cylinder too small: {what}")]
    CylinderTooSmall { what: String },

    #[error("unknown condition name '{name}'")]
    UnknownCondition { name: String },

    #[error("usage: {what}")]
    Usage { what: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {context}: {what}")]
    Parse { context: String, what: String },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }

    pub fn parse(context: impl Into<String>, what: impl Into<String>) -> Self {
        Error::Parse { context: context.into(), what: what.into() }
    }
}
