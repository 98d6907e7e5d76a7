//! Monte Carlo laboratory for data-adaptive local average causal effects.
//!
//! An asymptotically normal estimator of a population average effect `mu` is
//! compared against two targets: `mu` itself, and the clamped target that
//! equals the estimate whenever it lies within the heterogeneity margin `c`
//! of `mu`. Against the clamped target the error vanishes except on a normal
//! tail event, so its MSE decays faster than any power of `n`.

pub mod adaptive_target;
pub mod bounds;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod numeric;
pub mod simulation;

pub use adaptive_target::{
    clamp_gap, clamp_target, construct_weights, heterogeneity_margin, verify_weighting, TargetContext, TiltDirection,
    WeightingFunction,
};
pub use bounds::{bound_row, exact_clamp_mse, mismatch_probability, mse_upper_bound, BoundRow};
pub use distributions::{asymptotic_sd, draw_sample, EffectDistribution, PopulationSpec, Sample};
pub use error::{Error, Result};
pub use estimators::{estimate, Estimate, EstimatorKind};
pub use simulation::{
    fit_rates, replication_seed, run_cell, run_experiment, CellSummary, ExperimentResult, RateInput, RateReport,
    ReplicationRecord, SimulationConfig,
};
