//! Deterministic parallel Monte Carlo engine.
//!
//! Every replication owns a ChaCha8 stream seeded by [`replication_seed`], so a
//! replication's draws depend only on `(master_seed, n, rep)`. Replications run
//! on a rayon pool, are collected in index order, and are reduced sequentially
//! in ascending index order; results are bit-identical for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive_target::{band_target, signed_gap, TargetContext};
use crate::bounds::{exact_clamp_mse, mse_upper_bound};
use crate::distributions::{draw_sample, PopulationSpec};
use crate::error::{Error, Result};
use crate::estimators::{estimate, synthetic_normal, EstimatorKind};
use crate::numeric::{log_log_ols, RateFit, RatePoint};

pub const MIN_REPLICATIONS: u64 = 100;
/// Cells with fewer clamp-active replications are left out of the adaptive
/// rate fit.
pub const ADAPTIVE_FIT_MIN_EVENTS: u64 = 50;
/// Multiple of the MC standard error used by the built-in bound checks.
pub const MC_SE_MULTIPLIER: f64 = 5.0;
const MAX_REDRAWS: u32 = 1000;
const REDRAW_BIT: u64 = 1 << 63;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub population: PopulationSpec,
    pub estimator: EstimatorKind,
    pub n_grid: Vec<u64>,
    pub replications: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub record_replications: bool,
    /// Permits a degenerate effect law (`c = 0`).
    #[serde(default)]
    pub negative_control: bool,
}

fn invalid(path: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        path: path.into(),
        reason: reason.into(),
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        self.estimator.validate()?;
        if self.n_grid.is_empty() {
            return Err(invalid("n_grid", "n_grid is empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid", "n_grid not strictly increasing"));
        }
        let min_n = if self.estimator.needs_sample() { 2 } else { 1 };
        if self.n_grid[0] < min_n {
            return Err(invalid(
                "n_grid",
                format!("{} needs n >= {min_n}, got {}", self.estimator.name(), self.n_grid[0]),
            ));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(invalid(
                "replications",
                format!("need at least {MIN_REPLICATIONS} replications, got {}", self.replications),
            ));
        }
        if self.population.effect.margin() <= 0.0 && !self.negative_control {
            return Err(invalid(
                "population.effect",
                "effect heterogeneity assumption violated (c = 0); set negative_control to run a degenerate effect",
            ));
        }
        TargetContext::for_population(&self.population, &self.estimator).map(|_| ())
    }

    pub fn target_context(&self) -> Result<TargetContext> {
        TargetContext::for_population(&self.population, &self.estimator)
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the private stream for replication `rep` of the cell at `n`.
/// Injective in `rep` for fixed `(master_seed, n)`.
pub fn replication_seed(master_seed: u64, n: u64, rep: u64) -> u64 {
    let mut h = mix64(master_seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    h = mix64(h ^ n.wrapping_mul(0xd1b5_4a32_d192_ed03));
    mix64(h ^ rep.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7))
}

/// Seed for redraw `attempt` (>= 1) of a replication; lives in the half of the
/// index space with the high bit set, which ordinary replications never use.
pub fn redraw_seed(master_seed: u64, n: u64, rep: u64, attempt: u32) -> u64 {
    replication_seed(master_seed, n, REDRAW_BIT | (rep << 16) | u64::from(attempt & 0xffff))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub n: u64,
    pub rep: u64,
    pub theta_hat: f64,
    pub theta_fn: f64,
    /// `theta_hat - mu`
    pub err_pop: f64,
    /// `theta_hat - theta_fn`, as `sign(err_pop) * max(0, |err_pop| - c)`
    pub err_adaptive: f64,
    pub mismatch: bool,
}

impl ReplicationRecord {
    pub fn new(n: u64, rep: u64, theta_hat: f64, ctx: &TargetContext) -> Self {
        let err_pop = theta_hat - ctx.mu;
        Self {
            n,
            rep,
            theta_hat,
            theta_fn: band_target(theta_hat, ctx.mu, ctx.c),
            err_pop,
            err_adaptive: signed_gap(err_pop, ctx.c),
            mismatch: err_pop.abs() > ctx.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: u64,
    pub r_effective: u64,
    pub mse_pop: f64,
    pub mse_pop_se: f64,
    pub mse_adaptive: f64,
    pub mse_adaptive_se: f64,
    pub mismatch_rate: f64,
    pub mismatch_se: f64,
    pub discards: u64,
}

impl CellSummary {
    /// Number of clamp-active replications, recovered from the rate.
    pub fn mismatch_events(&self) -> u64 {
        (self.mismatch_rate * self.r_effective as f64).round() as u64
    }

    fn from_records(n: u64, records: &[ReplicationRecord], discards: u64) -> Self {
        let r = records.len() as f64;
        let mut sum_pop = 0.0;
        let mut sum_adaptive = 0.0;
        let mut events = 0u64;
        for rec in records {
            sum_pop += rec.err_pop * rec.err_pop;
            sum_adaptive += rec.err_adaptive * rec.err_adaptive;
            events += u64::from(rec.mismatch);
        }
        let mse_pop = sum_pop / r;
        let mse_adaptive = sum_adaptive / r;
        let mut ss_pop = 0.0;
        let mut ss_adaptive = 0.0;
        for rec in records {
            let dp = rec.err_pop * rec.err_pop - mse_pop;
            let da = rec.err_adaptive * rec.err_adaptive - mse_adaptive;
            ss_pop += dp * dp;
            ss_adaptive += da * da;
        }
        let se = |ss: f64| (ss / (r - 1.0)).sqrt() / r.sqrt();
        let rate = events as f64 / r;
        Self {
            n,
            r_effective: records.len() as u64,
            mse_pop,
            mse_pop_se: se(ss_pop),
            mse_adaptive,
            mse_adaptive_se: se(ss_adaptive),
            mismatch_rate: rate,
            mismatch_se: (rate * (1.0 - rate) / r).sqrt(),
            discards,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRun {
    pub summary: CellSummary,
    /// Present when the config asks for per-replication records.
    pub records: Option<Vec<ReplicationRecord>>,
}

/// Draws one estimate for replication `rep`; returns it with the number of
/// empty-arm redraws it took.
fn replicate<Z>(config: &SimulationConfig, ctx: &TargetContext, n: u64, rep: u64, noise: &Z) -> Result<(f64, u32)>
where
    Z: Fn(&mut ChaCha8Rng) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(config.master_seed, n, rep));
    if let EstimatorKind::SyntheticNormal { sigma } = config.estimator {
        return Ok((synthetic_normal(sigma, ctx.mu, n as usize, noise(&mut rng)).theta_hat, 0));
    }
    let mut attempt = 0;
    loop {
        let sample = draw_sample(&config.population, n as usize, &mut rng)?;
        match estimate(&config.estimator, &sample, ctx.mu, &mut rng) {
            Ok(e) => return Ok((e.theta_hat, attempt)),
            Err(Error::EmptyArm { .. }) if attempt < MAX_REDRAWS => {
                attempt += 1;
                rng = ChaCha8Rng::seed_from_u64(redraw_seed(config.master_seed, n, rep, attempt));
            }
            Err(Error::EmptyArm { .. }) => {
                return Err(Error::RedrawLimit {
                    n,
                    rep,
                    attempts: attempt,
                })
            }
            Err(e) => return Err(e),
        }
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub(crate) fn run_cell_with_noise<Z>(config: &SimulationConfig, ctx: &TargetContext, n: u64, noise: &Z) -> Result<CellRun>
where
    Z: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let draws: Vec<(f64, u32)> = (0..config.replications)
        .into_par_iter()
        .map(|rep| replicate(config, ctx, n, rep, noise))
        .collect::<Result<_>>()?;
    let records: Vec<ReplicationRecord> = draws
        .iter()
        .enumerate()
        .map(|(rep, &(theta_hat, _))| ReplicationRecord::new(n, rep as u64, theta_hat, ctx))
        .collect();
    let discards = draws.iter().map(|&(_, d)| u64::from(d)).sum();
    let summary = CellSummary::from_records(n, &records, discards);
    Ok(CellRun {
        summary,
        records: config.record_replications.then_some(records),
    })
}

/// Runs all replications of one cell on the current rayon pool.
pub fn run_cell(config: &SimulationConfig, ctx: &TargetContext, n: u64) -> Result<CellRun> {
    if !config.negative_control && ctx.c <= 0.0 {
        return Err(Error::DegenerateEffects);
    }
    run_cell_with_noise(config, ctx, n, &standard_normal)
}

/// Inputs the rate fits depend on; recoverable from `cells.csv` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInput {
    pub n: u64,
    pub mse_pop: f64,
    pub mse_adaptive: f64,
    pub mismatch_events: u64,
}

impl From<&CellSummary> for RateInput {
    fn from(cell: &CellSummary) -> Self {
        Self {
            n: cell.n,
            mse_pop: cell.mse_pop,
            mse_adaptive: cell.mse_adaptive,
            mismatch_events: cell.mismatch_events(),
        }
    }
}

/// A rate fit that may be absent when too few cells carry information.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSlot {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub n_points_used: usize,
    pub residual_rms: Option<f64>,
}

impl RateSlot {
    fn from_points(points: &[RatePoint]) -> Self {
        match log_log_ols(points) {
            Ok(RateFit {
                slope,
                intercept,
                n_points_used,
                residual_rms,
            }) => Self {
                slope: Some(slope),
                intercept: Some(intercept),
                n_points_used,
                residual_rms: Some(residual_rms),
            },
            Err(Error::InsufficientPoints { usable }) => Self {
                slope: None,
                intercept: None,
                n_points_used: usable,
                residual_rms: None,
            },
            Err(other) => unreachable!("log_log_ols only fails with InsufficientPoints: {other}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub mse_pop: RateSlot,
    pub mse_adaptive: RateSlot,
}

/// Log-log slopes of both MSEs against `n`. The adaptive fit only uses cells
/// with at least [`ADAPTIVE_FIT_MIN_EVENTS`] clamp-active replications.
pub fn fit_rates(cells: &[RateInput]) -> RateReport {
    let pop: Vec<RatePoint> = cells.iter().map(|c| RatePoint::new(c.n, c.mse_pop)).collect();
    let adaptive: Vec<RatePoint> = cells
        .iter()
        .filter(|c| c.mismatch_events >= ADAPTIVE_FIT_MIN_EVENTS)
        .map(|c| RatePoint::new(c.n, c.mse_adaptive))
        .collect();
    RateReport {
        mse_pop: RateSlot::from_points(&pop),
        mse_adaptive: RateSlot::from_points(&adaptive),
    }
}

/// Per-cell comparison of the empirical adaptive MSE against the closed-form
/// bound and the exact value (exactly normal estimator only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub n: u64,
    pub mse_adaptive: f64,
    pub mse_adaptive_se: f64,
    pub mse_bound: f64,
    pub exact_mse: f64,
    /// `mse_adaptive <= mse_bound * (1 + 5 * se / mse_adaptive)`
    pub within_bound: bool,
    /// `|mse_adaptive - exact_mse| <= 5 se`; `None` below the event threshold.
    pub oracle_agrees: Option<bool>,
}

impl BoundCheck {
    pub fn evaluate(cell: &CellSummary, ctx: &TargetContext) -> Result<Self> {
        let mse_bound = mse_upper_bound(ctx.c, ctx.sigma, cell.n);
        let exact_mse = exact_clamp_mse(ctx.c, ctx.sigma, cell.n)?;
        let within_bound = cell.mse_adaptive <= mse_bound + MC_SE_MULTIPLIER * cell.mse_adaptive_se * mse_bound / cell.mse_adaptive
            || cell.mse_adaptive == 0.0;
        let oracle_agrees = (cell.mismatch_events() >= ADAPTIVE_FIT_MIN_EVENTS)
            .then(|| (cell.mse_adaptive - exact_mse).abs() <= MC_SE_MULTIPLIER * cell.mse_adaptive_se);
        Ok(Self {
            n: cell.n,
            mse_adaptive: cell.mse_adaptive,
            mse_adaptive_se: cell.mse_adaptive_se,
            mse_bound,
            exact_mse,
            within_bound,
            oracle_agrees,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub context: TargetContext,
    pub cells: Vec<CellSummary>,
    /// All cells' records in `(n, rep)` order; empty unless requested.
    pub records: Vec<ReplicationRecord>,
    pub rates: RateReport,
    /// Filled for the synthetic estimator only.
    pub bound_checks: Vec<BoundCheck>,
}

/// Runs every cell of `config` on a pool of `workers` threads (0 = rayon's
/// default).
pub fn run_experiment(config: &SimulationConfig, workers: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let ctx = config.target_context()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction");

    let runs = pool.install(|| {
        config
            .n_grid
            .iter()
            .map(|&n| run_cell(config, &ctx, n))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut cells = Vec::with_capacity(runs.len());
    let mut records = Vec::new();
    for run in runs {
        cells.push(run.summary);
        if let Some(r) = run.records {
            records.extend(r);
        }
    }
    let inputs: Vec<RateInput> = cells.iter().map(RateInput::from).collect();
    let rates = fit_rates(&inputs);
    let bound_checks = match config.estimator {
        EstimatorKind::SyntheticNormal { .. } if ctx.c > 0.0 => cells
            .iter()
            .map(|cell| BoundCheck::evaluate(cell, &ctx))
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };
    Ok(ExperimentResult {
        context: ctx,
        cells,
        records,
        rates,
        bound_checks,
    })
}
