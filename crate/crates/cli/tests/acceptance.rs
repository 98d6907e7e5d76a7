//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use adaptlab_core::adaptive_target::{
    band_target, clamp_target, construct_weights, verify_weighting, TargetContext, ATOMIC_WEIGHT_TOL, CONTINUOUS_WEIGHT_TOL,
};
use adaptlab_core::bounds::{exact_clamp_mse, mse_upper_bound};
use adaptlab_core::distributions::{EffectDistribution, PopulationSpec};
use adaptlab_core::estimators::EstimatorKind;
use adaptlab_core::simulation::{run_experiment, ExperimentResult, SimulationConfig};

const BIN: &str = env!("CARGO_BIN_EXE_adaptlab");

/// 2 Phi(-sqrt n) for n = 1, 4, 9, from a 40-digit evaluation.
const MISMATCH_TARGETS: [(u64, f64); 3] = [(1, 0.317310507862914), (4, 0.0455002638963584), (9, 0.00269979606326019)];
/// Exact clamped MSE at c = sigma = 1 for n = 1, 4, 9, from a 40-digit quadrature.
const EXACT_MSE_TARGETS: [(u64, f64); 3] = [
    (1, 0.15067956668754150606),
    (4, 0.0028843633572599660501),
    (9, 0.000045207795663760831047),
];
/// B(16) at c = sigma = 1 from a 40-digit evaluation (6.69151129e-5 + 3.95890523e-6).
const BOUND_16: f64 = 7.0874018111582666e-5;
/// 2 Phi(-4) from a 40-digit evaluation.
const MISMATCH_4: f64 = 0.0455002638963584;
/// sqrt((1/12 + 1)/0.5 + (1/12)/0.5)
const DIM_SIGMA: f64 = 1.5275252316519468;
/// 2 Phi(-5 / DIM_SIGMA) from a 40-digit evaluation.
const DIM_MISMATCH_25: f64 = 0.0010631149171586;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn standard_population() -> PopulationSpec {
    PopulationSpec {
        baseline: EffectDistribution::uniform(0.0, 1.0).unwrap(),
        effect: EffectDistribution::two_point(0.0, 2.0, 0.5).unwrap(),
        assignment_prob: 0.5,
    }
}

fn synthetic_run(n_grid: Vec<u64>, seed: u64) -> ExperimentResult {
    let config = SimulationConfig {
        population: standard_population(),
        estimator: EstimatorKind::SyntheticNormal { sigma: 1.0 },
        n_grid,
        replications: 200_000,
        master_seed: seed,
        record_replications: false,
        negative_control: false,
    };
    run_experiment(&config, 0).expect("synthetic experiment")
}

fn within_time(elapsed: Duration, limit: Duration, detail: &mut String) -> bool {
    detail.push_str(&format!("; runtime {:.3}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs()));
    elapsed < limit
}

fn clamp_grid() -> Outcome {
    let start = Instant::now();
    let pairs = [(0.0, 1.0), (1.0, 1.0), (-2.5, 0.5), (0.4, 0.4), (1.0, 0.3), (100.0, 7.0), (-0.1, 1e-3), (3.7, 2.2), (1e-8, 5e3)];
    let mut mismatches = 0usize;
    let per_pair = 100_000;
    for &(mu, c) in &pairs {
        let ctx = TargetContext::new(mu, c, 1.0).unwrap();
        let lo = mu - 5.0 * c;
        let step = 10.0 * c / (per_pair - 1) as f64;
        for i in 0..per_pair {
            let theta = lo + step * i as f64;
            // independent statement of the three cases
            let d = theta - mu;
            let oracle = if d > c {
                mu + c
            } else if -d > c {
                mu - c
            } else {
                theta
            };
            if clamp_target(theta, &ctx).unwrap().to_bits() != oracle.to_bits() {
                mismatches += 1;
            }
        }
    }
    let mut detail = format!("{} pairs x {per_pair} values, {mismatches} bitwise mismatches", pairs.len());
    let fast = within_time(start.elapsed(), Duration::from_secs(1), &mut detail);
    outcome(mismatches == 0 && fast, detail)
}

fn mismatch_rates(run: &ExperimentResult, elapsed: Duration) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (cell, &(n, target)) in run.cells.iter().zip(&MISMATCH_TARGETS) {
        assert_eq!(cell.n, n);
        let se = (target * (1.0 - target) / cell.r_effective as f64).sqrt();
        let ok = (cell.mismatch_rate - target).abs() <= 4.0 * se;
        pass &= ok;
        parts.push(format!("n={n}: {:.7} vs {:.7} (4se={:.2e})", cell.mismatch_rate, target, 4.0 * se));
    }
    let mut detail = parts.join(", ");
    pass &= within_time(elapsed, Duration::from_secs(10), &mut detail);
    outcome(pass, detail)
}

fn mse_domination(run: &ExperimentResult) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (cell, &(n, frozen)) in run.cells.iter().zip(&EXACT_MSE_TARGETS) {
        let bound = mse_upper_bound(1.0, 1.0, n);
        let rel_se = cell.mse_adaptive_se / cell.mse_adaptive;
        let dominated = cell.mse_adaptive <= bound * (1.0 + 5.0 * rel_se);
        let exact = exact_clamp_mse(1.0, 1.0, n).unwrap();
        let exact_ok = ((exact - frozen) / frozen).abs() < 1e-8;
        let events = cell.mismatch_events();
        let agrees = events < 50 || (cell.mse_adaptive - exact).abs() <= 5.0 * cell.mse_adaptive_se;
        pass &= dominated && agrees && exact_ok;
        parts.push(format!(
            "n={n}: mse {:.4e} <= B {:.4e} [{}], exact {:.4e} within 5se [{}] ({events} events)",
            cell.mse_adaptive,
            bound,
            dominated,
            exact,
            if events >= 50 { agrees.to_string() } else { "skipped".into() }
        ));
    }
    outcome(pass, parts.join("; "))
}

fn rate_separation() -> Outcome {
    let run = synthetic_run(vec![1, 2, 4, 8], 4004);
    let pop_slope = run.rates.mse_pop.slope.unwrap_or(f64::NAN);
    let adaptive_slope = run.rates.mse_adaptive.slope.unwrap_or(f64::NAN);
    let scaled: Vec<f64> = run.cells.iter().map(|c| c.n as f64 * c.mse_adaptive).collect();
    let decreasing = scaled.windows(2).all(|w| w[1] < w[0]);
    let pass = (-1.05..=-0.95).contains(&pop_slope) && adaptive_slope <= -2.0 && decreasing;
    outcome(
        pass,
        format!(
            "slope(mse_pop) = {pop_slope:.4} in [-1.05, -0.95]; slope(mse_adaptive) = {adaptive_slope:.4} <= -2; n*mse_adaptive = {:?}",
            scaled.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn real_estimator() -> Outcome {
    let start = Instant::now();
    let base = SimulationConfig {
        population: standard_population(),
        estimator: EstimatorKind::DifferenceInMeans,
        n_grid: vec![250, 500, 1000, 2000, 4000],
        replications: 20_000,
        master_seed: 5005,
        record_replications: false,
        negative_control: false,
    };
    let ctx = base.target_context().unwrap();
    assert!((ctx.sigma - DIM_SIGMA).abs() < 1e-12 && ctx.c == 1.0);
    let run = run_experiment(&base, 0).expect("difference-in-means grid");
    let small = run_experiment(
        &SimulationConfig {
            n_grid: vec![25],
            master_seed: 5025,
            ..base.clone()
        },
        0,
    )
    .expect("n = 25 cell");

    let slope = run.rates.mse_pop.slope.unwrap_or(f64::NAN);
    let last = run.cells.last().unwrap();
    let ratio_ok = last.mse_adaptive < 0.1 * last.mse_pop;
    let rate25 = small.cells[0].mismatch_rate;
    let loose_ok = rate25 >= 0.2 * DIM_MISMATCH_25 && rate25 <= 5.0 * DIM_MISMATCH_25;
    let mut detail = format!(
        "slope(mse_pop) = {slope:.4} in [-1.1, -0.9]; n=4000: n*mse_adaptive = {:.3e} < 0.1 * n*mse_pop = {:.3e}; \
         n=25 mismatch {rate25:.5} in [{:.5}, {:.5}]",
        4000.0 * last.mse_adaptive,
        0.1 * 4000.0 * last.mse_pop,
        0.2 * DIM_MISMATCH_25,
        5.0 * DIM_MISMATCH_25
    );
    let fast = within_time(start.elapsed(), Duration::from_secs(120), &mut detail);
    outcome((-1.1..=-0.9).contains(&slope) && ratio_ok && loose_ok && fast, detail)
}

fn weighting_witness() -> Outcome {
    let start = Instant::now();
    let laws = [
        EffectDistribution::two_point(0.0, 2.0, 0.5).unwrap(),
        EffectDistribution::uniform(0.0, 1.0).unwrap(),
        EffectDistribution::scaled_beta(2.0, 3.0, 0.0, 1.0).unwrap(),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for dist in laws {
        let tol = if dist.is_atomic() { ATOMIC_WEIGHT_TOL } else { CONTINUOUS_WEIGHT_TOL };
        let (mean, c) = (dist.mean(), dist.margin());
        let mut worst: f64 = 0.0;
        let mut ok = true;
        for k in 0..=20 {
            let m = mean - c + 2.0 * c * k as f64 / 20.0;
            match construct_weights(&dist, m).and_then(|w| Ok((w, verify_weighting(&dist, &w, m)?))) {
                Ok((w, residual)) => {
                    ok &= w.min_weight() >= 0.0 && residual.abs() <= tol;
                    worst = worst.max(residual.abs());
                }
                Err(e) => {
                    ok = false;
                    parts.push(format!("{dist} m={m}: {e}"));
                }
            }
        }
        pass &= ok;
        parts.push(format!("{dist}: max |residual| {worst:.2e} (tol {tol:e})"));
    }
    let mut detail = parts.join("; ");
    pass &= within_time(start.elapsed(), Duration::from_secs(1), &mut detail);
    outcome(pass, detail)
}

fn eight_digits(x: f64) -> String {
    format!("{x:.7e}")
}

fn bound_tabulation() -> Outcome {
    let ns: Vec<String> = (1..=200).map(|n| n.to_string()).collect();
    let o = Command::new(BIN)
        .args(["bounds", "--c", "1", "--sigma", "1", "--n", &ns.join(",")])
        .output()
        .expect("bounds subcommand");
    if !o.status.success() {
        return outcome(false, format!("bounds exited with {:?}", o.status.code()));
    }
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|f| f.parse::<f64>().unwrap()).collect())
        .collect();
    let row = |n: usize| &rows[n - 1];
    let bound16 = eight_digits(row(16)[2]);
    let mis4 = eight_digits(row(4)[1]);
    let dominated = rows.iter().all(|r| r[4] <= r[2]);
    let vanishing = rows.iter().filter(|r| r[0] >= 40.0).all(|r| r[3] < 1e-6);
    let pass = bound16 == eight_digits(BOUND_16) && mis4 == eight_digits(MISMATCH_4) && dominated && vanishing;
    outcome(
        pass,
        format!(
            "B(16) = {bound16} (independent evaluation {}); mismatch(4) = {mis4} (want {}); exact <= bound in all {} rows [{dominated}]; n*B(n) < 1e-6 for n >= 40 [{vanishing}]",
            eight_digits(BOUND_16),
            eight_digits(MISMATCH_4),
            rows.len()
        ),
    )
}

fn determinism(scratch: &Path) -> Outcome {
    let config = r#"{
      "population": {
        "baseline": {"kind": "uniform", "lo": 0, "hi": 1},
        "effect": {"kind": "scaled_beta", "alpha": 2, "beta": 3, "lo": -1, "hi": 3},
        "assignment_prob": 0.4
      },
      "estimator": {"kind": "difference_in_means"},
      "n_grid": [5, 20, 80],
      "replications": 3000,
      "master_seed": 8008
    }"#;
    let config_path = scratch.join("determinism.json");
    fs::write(&config_path, config).unwrap();
    let mut outputs = Vec::new();
    for (label, workers) in [("w1", "1"), ("w1-again", "1"), ("w2", "2"), ("w8", "8")] {
        let out = scratch.join(label);
        let status = Command::new(BIN)
            .args(["simulate", "--config", config_path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers])
            .status()
            .expect("simulate runs");
        if !status.success() {
            return outcome(false, format!("simulate --workers {workers} exited with {:?}", status.code()));
        }
        outputs.push((label, fs::read(out.join("cells.csv")).unwrap(), fs::read(out.join("rates.json")).unwrap()));
    }
    let identical = outputs.windows(2).all(|w| w[0].1 == w[1].1 && w[0].2 == w[1].2);
    outcome(
        identical,
        format!(
            "cells.csv and rates.json byte-identical across {:?}",
            outputs.iter().map(|o| o.0).collect::<Vec<_>>()
        ),
    )
}

fn negative_control() -> Outcome {
    let config = SimulationConfig {
        population: PopulationSpec {
            effect: EffectDistribution::degenerate(1.0).unwrap(),
            ..standard_population()
        },
        estimator: EstimatorKind::DifferenceInMeans,
        n_grid: vec![50, 100, 200, 400, 800],
        replications: 5_000,
        master_seed: 9009,
        record_replications: true,
        negative_control: true,
    };
    let run = run_experiment(&config, 0).expect("negative-control run");
    let identical = run.records.iter().all(|r| r.err_adaptive.to_bits() == r.err_pop.to_bits());
    let projected = run.records.iter().all(|r| r.theta_fn == band_target(r.theta_hat, 1.0, 0.0));
    let slope = run.rates.mse_adaptive.slope.unwrap_or(f64::NAN);
    outcome(
        identical && projected && (-1.1..=-0.9).contains(&slope),
        format!(
            "c = {}, err_adaptive == err_pop in all {} records [{identical}]; slope(mse_adaptive) = {slope:.4} in [-1.1, -0.9]",
            run.context.c,
            run.records.len()
        ),
    )
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    results.push(("1 clamp correctness", clamp_grid()));

    let start = Instant::now();
    let prop2 = synthetic_run(MISMATCH_TARGETS.iter().map(|t| t.0).collect(), 2002);
    let elapsed = start.elapsed();
    results.push(("2 mismatch-rate formula", mismatch_rates(&prop2, elapsed)));
    results.push(("3 MSE domination and oracle agreement", mse_domination(&prop2)));
    results.push(("4 rate separation", rate_separation()));
    results.push(("5 real-estimator asymptotics", real_estimator()));
    results.push(("6 weighting witness", weighting_witness()));
    results.push(("7 bound tabulation", bound_tabulation()));
    results.push(("8 determinism", determinism(scratch.path())));
    results.push(("9 negative control", negative_control()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
