//! Experiment drivers behind the `eebeam` binary: per-iteration
//! convergence traces and power-grid sweeps, each written as one tidy CSV
//! plus a JSON manifest describing exactly what ran.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use eebeam_core::baselines;
use eebeam_core::linkbudget::{
    db_to_linear, generate_channel, BeamGainModel, ScenarioConfig, ScenarioParams,
};
use eebeam_core::metrics;
use eebeam_core::optimizer::{self, AlgorithmConfig, ProblemInstance, RunResult, StopReason};

/// Seeds used when none are given.
pub fn default_seeds() -> Vec<u64> {
    (1..=20).collect()
}

/// Transmit-power grid used when none is given, dBW.
pub fn default_total_power_grid_dbw() -> Vec<f64> {
    vec![6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]
}

/// Static-power grid used when none is given, dBW.
pub fn default_static_power_grid_dbw() -> Vec<f64> {
    vec![6.0, 8.0, 10.0, 12.0, 14.0]
}

/// Scenario file plus its resolved runtime form.
pub struct LoadedScenario {
    pub path: PathBuf,
    pub config: ScenarioConfig,
    pub params: ScenarioParams,
    pub gains: BeamGainModel,
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let config = ScenarioConfig::from_file(path)
        .with_context(|| format!("reading scenario {}", path.display()))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let (params, gains) = config
        .resolve(base)
        .with_context(|| format!("resolving scenario {}", path.display()))?;
    Ok(LoadedScenario {
        path: path.to_path_buf(),
        config,
        params,
        gains,
    })
}

/// Shared experiment knobs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub xi: f64,
    pub max_outer: usize,
}

impl ExperimentConfig {
    fn algorithm(&self, seed: u64) -> AlgorithmConfig {
        AlgorithmConfig {
            xi: self.xi,
            max_outer: self.max_outer,
            rng_seed: seed,
            ..AlgorithmConfig::default()
        }
    }
}

/// What an experiment ran and where its outputs went.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub scenario_path: String,
    /// Echo of the scenario file the run resolved.
    pub scenario: ScenarioConfig,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_dbw: Option<Vec<f64>>,
    pub xi: f64,
    pub max_outer: usize,
    pub version: String,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
    /// Grid point whose seed-mean efficiency was highest (power sweeps).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_total_power_dbw: Option<f64>,
    /// Whether the seed-mean efficiency fell at every static-power step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_decreases_with_static_power: Option<bool>,
}

fn write_manifest(manifest: &RunManifest, out_dir: &Path) -> Result<()> {
    let path = out_dir.join("run_manifest.json");
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn manifest_base(
    experiment: &str,
    scenario: &LoadedScenario,
    cfg: &ExperimentConfig,
    started: Instant,
) -> RunManifest {
    RunManifest {
        experiment: experiment.to_string(),
        scenario_path: scenario.path.display().to_string(),
        scenario: scenario.config.clone(),
        seeds: cfg.seeds.clone(),
        grid_dbw: None,
        xi: cfg.xi,
        max_outer: cfg.max_outer,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
        outputs: Vec::new(),
        best_total_power_dbw: None,
        efficiency_decreases_with_static_power: None,
    }
}

// ---------------------------------------------------------------------------
// convergence traces
// ---------------------------------------------------------------------------

struct ConvergenceCell {
    seed: u64,
    result: RunResult,
    zf_ee_nats_per_w: f64,
    zf_power_w: f64,
    zf_min_qos_slack: f64,
    zf_millis: f64,
}

/// Runs the optimizer per seed and writes `convergence.csv` with three row
/// kinds: `alg` per-iteration traces, one `zf` baseline row per seed, and
/// a seed-mean `mean` trace padded with each run's final efficiency.
pub fn convergence(
    scenario: &LoadedScenario,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunManifest> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)?;
    let params = &scenario.params;

    let cells: Vec<ConvergenceCell> = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<ConvergenceCell> {
            let channel = generate_channel(params, &scenario.gains, seed)?;
            let inst = ProblemInstance::from_scenario(params, &channel);
            let result = optimizer::run(&inst, &cfg.algorithm(seed))?;

            let zf_started = Instant::now();
            let zf = baselines::zero_forcing_precoder(
                channel.matrix(),
                params.total_power_w,
                &params.sinr_thresholds,
                params.noise_power,
            )?;
            let zf_report = metrics::energy_efficiency(
                channel.matrix(),
                &zf,
                params.noise_power,
                &params.beam_weights,
                params.static_power_w,
            )?;
            let zf_feas = metrics::check_feasible(
                channel.matrix(),
                &zf,
                params.noise_power,
                params.total_power_w,
                &params.sinr_thresholds,
            )?;
            Ok(ConvergenceCell {
                seed,
                result,
                zf_ee_nats_per_w: zf_report.ee_nats_per_w,
                zf_power_w: zf_report.total_power_w,
                zf_min_qos_slack: zf_feas.min_sinr_slack(),
                zf_millis: zf_started.elapsed().as_secs_f64() * 1e3,
            })
        })
        .collect::<Result<_>>()?;

    let bw = params.bandwidth_hz;
    let gbps = |ee: f64| metrics::nats_per_w_to_gbps_per_w(ee, bw);
    let mut csv = String::from(
        "series,seed,iteration,ee_nats_per_w,ee_gbps_per_w,f,mu,power_w,min_qos_slack,inner_status,millis\n",
    );
    for cell in &cells {
        for row in &cell.result.trace {
            csv.push_str(&format!(
                "alg,{},{},{},{},{},{},{},{},{},{:.3}\n",
                cell.seed,
                row.iteration,
                row.ee_nats_per_w,
                gbps(row.ee_nats_per_w),
                row.surrogate,
                row.mu,
                row.power_w,
                row.min_qos_slack,
                row.inner_status.as_str(),
                row.millis,
            ));
        }
    }
    for cell in &cells {
        csv.push_str(&format!(
            "zf,{},0,{},{},,,{},{},,{:.3}\n",
            cell.seed,
            cell.zf_ee_nats_per_w,
            gbps(cell.zf_ee_nats_per_w),
            cell.zf_power_w,
            cell.zf_min_qos_slack,
            cell.zf_millis,
        ));
    }
    let longest = cells
        .iter()
        .map(|c| c.result.trace.len())
        .max()
        .unwrap_or(0);
    if cfg.seeds.len() > 1 {
        for iteration in 1..=longest {
            let padded: Vec<f64> = cells
                .iter()
                .filter(|c| !c.result.trace.is_empty())
                .map(|c| {
                    let idx = iteration.min(c.result.trace.len()) - 1;
                    c.result.trace[idx].ee_nats_per_w
                })
                .collect();
            if padded.is_empty() {
                break;
            }
            let mean = padded.iter().sum::<f64>() / padded.len() as f64;
            csv.push_str(&format!("mean,,{iteration},{mean},{},,,,,,\n", gbps(mean)));
        }
    }

    let csv_path = out_dir.join("convergence.csv");
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let mut manifest = manifest_base("convergence", scenario, cfg, started);
    manifest.outputs = vec![csv_path.display().to_string()];
    write_manifest(&manifest, out_dir)?;
    Ok(manifest)
}

// ---------------------------------------------------------------------------
// power sweeps
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq)]
enum SweptQuantity {
    TotalPower,
    StaticPower,
}

impl SweptQuantity {
    fn column(self) -> &'static str {
        match self {
            SweptQuantity::TotalPower => "p_t_dbw",
            SweptQuantity::StaticPower => "p_0_dbw",
        }
    }

    fn apply(self, params: &ScenarioParams, value_dbw: f64) -> ScenarioParams {
        let mut p = params.clone();
        match self {
            SweptQuantity::TotalPower => p.total_power_w = db_to_linear(value_dbw),
            SweptQuantity::StaticPower => p.static_power_w = db_to_linear(value_dbw),
        }
        p
    }
}

struct SweepCell {
    value_dbw: f64,
    seed: u64,
    ee_nats_per_w: f64,
    power_w: f64,
    iterations: usize,
    converged: bool,
    zf_ee_nats_per_w: f64,
    zf_power_w: f64,
}

fn sweep(
    quantity: SweptQuantity,
    scenario: &LoadedScenario,
    cfg: &ExperimentConfig,
    grid_dbw: &[f64],
    out_dir: &Path,
) -> Result<RunManifest> {
    let started = Instant::now();
    if grid_dbw.is_empty() {
        bail!("empty power grid");
    }
    fs::create_dir_all(out_dir)?;

    let jobs: Vec<(f64, u64)> = grid_dbw
        .iter()
        .flat_map(|&p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let mut cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(value_dbw, seed)| -> Result<SweepCell> {
            let params = quantity.apply(&scenario.params, value_dbw);
            let channel = generate_channel(&params, &scenario.gains, seed)?;
            let inst = ProblemInstance::from_scenario(&params, &channel);
            let result = optimizer::run(&inst, &cfg.algorithm(seed))?;
            let zf = baselines::zero_forcing_precoder(
                channel.matrix(),
                params.total_power_w,
                &params.sinr_thresholds,
                params.noise_power,
            )?;
            let zf_report = metrics::energy_efficiency(
                channel.matrix(),
                &zf,
                params.noise_power,
                &params.beam_weights,
                params.static_power_w,
            )?;
            Ok(SweepCell {
                value_dbw,
                seed,
                ee_nats_per_w: result.report.ee_nats_per_w,
                power_w: result.report.total_power_w,
                iterations: result.trace.len(),
                converged: matches!(result.stop, StopReason::Converged { .. }),
                zf_ee_nats_per_w: zf_report.ee_nats_per_w,
                zf_power_w: zf_report.total_power_w,
            })
        })
        .collect::<Result<_>>()?;
    cells.sort_by(|a, b| {
        a.value_dbw
            .total_cmp(&b.value_dbw)
            .then(a.seed.cmp(&b.seed))
    });

    let bw = scenario.params.bandwidth_hz;
    let gbps = |ee: f64| metrics::nats_per_w_to_gbps_per_w(ee, bw);
    let mut csv = format!(
        "series,{},seed,ee_nats_per_w,ee_gbps_per_w,power_w,iterations,converged\n",
        quantity.column()
    );
    for c in &cells {
        csv.push_str(&format!(
            "alg,{},{},{},{},{},{},{}\n",
            c.value_dbw,
            c.seed,
            c.ee_nats_per_w,
            gbps(c.ee_nats_per_w),
            c.power_w,
            c.iterations,
            c.converged,
        ));
    }
    for c in &cells {
        csv.push_str(&format!(
            "zf,{},{},{},{},{},,\n",
            c.value_dbw,
            c.seed,
            c.zf_ee_nats_per_w,
            gbps(c.zf_ee_nats_per_w),
            c.zf_power_w,
        ));
    }

    // seed means per grid point, in grid order
    let mut means: Vec<(f64, f64)> = Vec::with_capacity(grid_dbw.len());
    for &p in grid_dbw {
        let values: Vec<f64> = cells
            .iter()
            .filter(|c| c.value_dbw == p)
            .map(|c| c.ee_nats_per_w)
            .collect();
        means.push((p, values.iter().sum::<f64>() / values.len() as f64));
    }
    if cfg.seeds.len() > 1 {
        for &(p, mean) in &means {
            csv.push_str(&format!("mean,{p},,{mean},{},,,\n", gbps(mean)));
        }
    }
    let best = means
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    if grid_dbw.len() > 1 {
        csv.push_str(&format!("best,{},,{},{},,,\n", best.0, best.1, gbps(best.1)));
    }

    let name = match quantity {
        SweptQuantity::TotalPower => "sweep_total_power.csv",
        SweptQuantity::StaticPower => "sweep_static_power.csv",
    };
    let csv_path = out_dir.join(name);
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let mut manifest = manifest_base(
        match quantity {
            SweptQuantity::TotalPower => "sweep_total_power",
            SweptQuantity::StaticPower => "sweep_static_power",
        },
        scenario,
        cfg,
        started,
    );
    manifest.grid_dbw = Some(grid_dbw.to_vec());
    manifest.outputs = vec![csv_path.display().to_string()];
    match quantity {
        SweptQuantity::TotalPower => manifest.best_total_power_dbw = Some(best.0),
        SweptQuantity::StaticPower => {
            let falling = means.windows(2).all(|w| w[1].1 < w[0].1);
            manifest.efficiency_decreases_with_static_power = Some(falling);
        }
    }
    write_manifest(&manifest, out_dir)?;
    Ok(manifest)
}

/// Sweeps the transmit-power budget over `grid_dbw`, writing
/// `sweep_total_power.csv`.
pub fn sweep_total_power(
    scenario: &LoadedScenario,
    cfg: &ExperimentConfig,
    grid_dbw: &[f64],
    out_dir: &Path,
) -> Result<RunManifest> {
    sweep(SweptQuantity::TotalPower, scenario, cfg, grid_dbw, out_dir)
}

/// Sweeps the static power draw over `grid_dbw`, writing
/// `sweep_static_power.csv`.
pub fn sweep_static_power(
    scenario: &LoadedScenario,
    cfg: &ExperimentConfig,
    grid_dbw: &[f64],
    out_dir: &Path,
) -> Result<RunManifest> {
    sweep(SweptQuantity::StaticPower, scenario, cfg, grid_dbw, out_dir)
}

