use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid increment law: {0}")]
    InvalidLaw(String),

    #[error("moment generating function diverged at theta = {theta}")]
    MgfDiverged { theta: f64 },

    #[error("{what} did not converge (residual {residual:e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("unstable queue: arrival rate {arrival_rate} >= service rate {service_rate}")]
    UnstableQueue { arrival_rate: f64, service_rate: f64 },

    #[error("no positive root of the stability equation inside the MGF domain")]
    NoRootInDomain,

    #[error("no root of the horizon equation inside the MGF domain")]
    NoDerivativeRoot,

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    NoFixedPoint { iterations: usize },

    #[error("argument {0} outside the unit interval")]
    OutOfUnitInterval(f64),

    #[error("state {0} has zero probability mass")]
    ZeroMassState(usize),

    #[error("copula incompatible with marginal: entry ({row}, {col}) = {value:e}")]
    IncompatibleCopula { row: usize, col: usize, value: f64 },

    #[error("invalid copula: {0}")]
    InvalidCopula(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),
}
