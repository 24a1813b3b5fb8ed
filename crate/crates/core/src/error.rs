use std::fmt;

/// Which end of an edge a boundary quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid optimal weights: c2 = {c2} must be positive")]
    InvalidWeights { c2: f64 },

    #[error("invalid state: {what} = {value}")]
    InvalidState { what: &'static str, value: f64 },

    #[error("dry shallow-water state: h = {0}")]
    DryState(f64),

    #[error("unsupported by model: {0}")]
    Unsupported(String),

    #[error("flux array has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("stage assembly: {0}")]
    StageAssembly(String),

    #[error("Runge-Kutta stage {stage} failed: {source}")]
    Stage { stage: usize, source: Box<Error> },

    #[error("degenerate wave speed: maximum characteristic speed is {0}")]
    DegenerateSpeed(f64),

    #[error("node {node}: Newton solve did not converge (residual {residual:e})")]
    NodeSolve { node: usize, residual: f64 },

    #[error("node {node}: trace on edge {edge} is supercritical (Froude {froude})")]
    OutOfRegime { node: usize, edge: usize, froude: f64 },

    #[error("network configuration: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
