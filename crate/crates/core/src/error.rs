use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("steady state did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("effective coupling is zero, the optimal phase is undefined")]
    ZeroCoupling,

    #[error("system is not stable (Routh-Hurwitz margin {margin:.3e})")]
    UnstableSystem { margin: f64 },

    #[error("response denominator vanishes at omega = {omega}")]
    SingularDenominator { omega: f64 },

    #[error("spectrum has imaginary residual {residual:.3e} at omega = {omega}")]
    ImaginaryResidual { omega: f64, residual: f64 },

    #[error("quadrature failed: error estimate {error:.3e} after {panels} panels")]
    QuadratureFailure { error: f64, panels: usize },

    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("adiabatic formula outside its domain: {0}")]
    DomainError(String),

    #[error("feedback gain eta = {eta} exceeds the stability bound 4C = {bound}")]
    FeedbackUnstable { eta: f64, bound: f64 },

    #[error("parametric gain G = {gain} is at or above threshold kappa/2 = {threshold}")]
    AboveThreshold { gain: f64, threshold: f64 },

    #[error("Lyapunov operator is singular (residual {residual:.3e})")]
    SingularSolve { residual: f64 },

    #[error("trajectory diverged at step {step} (|f| = {norm:.3e}); reduce dt")]
    DivergingTrajectory { step: usize, norm: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("cannot parse expression `{0}`")]
    Expression(String),

    #[error("invalid sweep: {0}")]
    Sweep(String),

    #[error("output: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;
