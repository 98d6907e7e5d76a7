use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate fit needs at least 2 points with positive value and distinct n, got {usable}")]
    InsufficientPoints { usable: usize },

    #[error(
        "quadrature did not reach tolerance {tolerance:e} after {evaluations} evaluations \
         (estimate {estimate:e}, error estimate {error_estimate:e})"
    )]
    QuadratureFailure {
        estimate: f64,
        error_estimate: f64,
        tolerance: f64,
        evaluations: usize,
    },

    #[error("asymptotic standard deviation is zero")]
    DegenerateVariance,

    #[error("empty treatment arm (treated = {treated}, control = {control})")]
    EmptyArm { treated: usize, control: usize },

    #[error("effect heterogeneity assumption violated: margin c = min(sup - mean, mean - inf) is zero")]
    DegenerateEffects,

    #[error("target {target} lies outside the admissible interval [{lo}, {hi}]")]
    TargetOutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("target {target} sits on a zero-mass support endpoint and cannot be reached within tolerance")]
    UnattainableBoundary { target: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid sample size {n}: {reason}")]
    InvalidSampleSize { n: u64, reason: &'static str },

    #[error("invalid configuration at `{path}`: {reason}")]
    InvalidConfig { path: String, reason: String },

    #[error("replication {rep} at n = {n} exhausted {attempts} redraws without two nonempty arms")]
    RedrawLimit { n: u64, rep: u64, attempts: u32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
