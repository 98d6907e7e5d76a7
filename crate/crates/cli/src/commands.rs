use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use adaptlab_core::simulation::{fit_rates, RateInput};
use adaptlab_core::{
    bound_row, construct_weights, run_experiment, verify_weighting, EffectDistribution, Error as CoreError,
    EstimatorKind, TiltDirection,
};
use chrono::{SecondsFormat, Utc};

use crate::config::{config_digest, parse_config};
use crate::manifest::RunManifest;
use crate::output::{rates_json, read_cells, write_bound_checks, write_bounds, write_cells, write_reps};
use crate::{CliError, Result};

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    /// 0 picks the available parallelism.
    pub workers: usize,
    pub seed: Option<u64>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Runs an experiment and writes `cells.csv`, `rates.json`, `manifest.json`,
/// plus `reps.csv` when replications are recorded and `bound_check.csv` for
/// the synthetic estimator.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<RunManifest> {
    let started = now();
    let mut config = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    let workers = if args.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        args.workers
    };

    let result = run_experiment(&config, workers).map_err(CliError::Runtime)?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut outputs = Vec::new();

    let cells_path = args.out.join("cells.csv");
    write_cells(create(&cells_path)?, &result.cells)?;
    outputs.push("cells.csv".to_string());

    if config.record_replications {
        let reps_path = args.out.join("reps.csv");
        write_reps(create(&reps_path)?, &result.records)?;
        outputs.push("reps.csv".to_string());
    }

    write_text(&args.out.join("rates.json"), &rates_json(&result.rates))?;
    outputs.push("rates.json".to_string());

    if matches!(config.estimator, EstimatorKind::SyntheticNormal { .. }) && !result.bound_checks.is_empty() {
        write_bound_checks(create(&args.out.join("bound_check.csv"))?, &result.bound_checks)?;
        outputs.push("bound_check.csv".to_string());
    }

    outputs.push("manifest.json".to_string());
    let manifest = RunManifest {
        config_digest: config_digest(&config),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        workers,
        started,
        finished: now(),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_text(&args.out.join("manifest.json"), &text)?;
    Ok(manifest)
}

/// Tabulates the closed-form quantities for each `n` as CSV.
pub fn cmd_bounds<W: Write>(c: f64, sigma: f64, ns: &[u64], out: W) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(CliError::Usage(format!("--c must be positive, got {c}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(CliError::Usage(format!("--sigma must be positive, got {sigma}")));
    }
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Usage("--n needs a nonempty list of positive sizes".into()));
    }
    let rows = ns
        .iter()
        .map(|&n| bound_row(c, sigma, n))
        .collect::<adaptlab_core::Result<Vec<_>>>()
        .map_err(CliError::Runtime)?;
    write_bounds(out, &rows)
}

/// Up to ten significant digits, trailing zeros trimmed.
fn short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = (9 - x.abs().log10().floor() as i32).clamp(0, 17) as usize;
    let s = format!("{x:.digits$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Prints the constructed weighting for target `m` and its verification residual.
pub fn cmd_weights<W: Write>(dist: &EffectDistribution, m: f64, mut out: W) -> Result<()> {
    let mean = dist.mean();
    let c = dist.margin();
    let w = construct_weights(dist, m).map_err(|e| match e {
        CoreError::TargetOutOfRange { target, lo, hi } => CliError::Usage(format!(
            "target {target} lies outside the admissible interval [mean - c, mean + c] = [{lo}, {hi}]"
        )),
        other @ CoreError::UnattainableBoundary { .. } => CliError::Input(other),
        other => CliError::Runtime(other),
    })?;
    let residual = verify_weighting(dist, &w, m).map_err(CliError::Runtime)?;

    let direction = match w.direction {
        TiltDirection::Up => "up",
        TiltDirection::Down => "down",
        TiltDirection::Flat => "flat",
    };
    let (region, inside, outside) = match w.direction {
        TiltDirection::Up => (format!("t >= {}", short(w.threshold)), 1.0, 1.0 - w.lambda),
        TiltDirection::Down => (format!("t <= {}", short(w.threshold)), 1.0, 1.0 - w.lambda),
        TiltDirection::Flat => ("all t".to_string(), 1.0, 1.0),
    };
    let ratio = if outside > 0.0 {
        format!("{}:1", short(inside / outside))
    } else {
        "1:0".to_string()
    };
    let io = |e| CliError::io("<stdout>", e);
    writeln!(out, "distribution: {dist}").map_err(io)?;
    writeln!(out, "mean: {}", short(mean)).map_err(io)?;
    writeln!(out, "margin_c: {}", short(c)).map_err(io)?;
    writeln!(out, "admissible: [{}, {}]", short(mean - c), short(mean + c)).map_err(io)?;
    writeln!(out, "target: {}", short(m)).map_err(io)?;
    writeln!(out, "direction: {direction}").map_err(io)?;
    writeln!(out, "lambda: {}", w.lambda).map_err(io)?;
    writeln!(out, "threshold: {}", w.threshold).map_err(io)?;
    writeln!(out, "weight_ratio: {ratio} ({region} : elsewhere)").map_err(io)?;
    writeln!(out, "achieved_mean: {}", m + residual).map_err(io)?;
    writeln!(out, "residual: {residual:e}").map_err(io)?;
    Ok(())
}

/// Re-fits both rate slopes from a `cells.csv` file.
pub fn cmd_rates<W: Write>(cells: &Path, mut out: W) -> Result<()> {
    let file = File::open(cells).map_err(|e| CliError::io(cells, e))?;
    let cells = read_cells(file)?;
    let inputs: Vec<RateInput> = cells.iter().map(RateInput::from).collect();
    out.write_all(rates_json(&fit_rates(&inputs)).as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}
