use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use eebeam_cli::experiments::{self, ExperimentConfig};

/// Energy-efficiency precoder experiments for a multibeam satellite
/// downlink.
#[derive(Parser)]
#[command(name = "eebeam", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-iteration efficiency traces against the channel-inverting
    /// baseline
    Convergence(CommonArgs),
    /// Efficiency across a grid of transmit-power budgets
    SweepPt(SweepArgs),
    /// Efficiency across a grid of static power draws
    SweepP0(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario JSON file
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated channel seeds [default: 1..=20]
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Outer-loop stopping tolerance on the surrogate value
    #[arg(long, default_value_t = 1e-3)]
    xi: f64,
    /// Outer-loop iteration budget
    #[arg(long, default_value_t = 50)]
    max_outer: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated grid in dBW [default: 6..=12 for the transmit
    /// budget, {6,8,10,12,14} for static power]
    #[arg(long, value_delimiter = ',')]
    grid_dbw: Option<Vec<f64>>,
}

impl CommonArgs {
    fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            seeds: self
                .seeds
                .clone()
                .unwrap_or_else(experiments::default_seeds),
            xi: self.xi,
            max_outer: self.max_outer,
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (common, manifest) = match &cli.command {
        Command::Convergence(args) => {
            let scenario = experiments::load_scenario(&args.scenario)?;
            let manifest =
                experiments::convergence(&scenario, &args.experiment_config(), &args.out)?;
            (args, manifest)
        }
        Command::SweepPt(args) => {
            let scenario = experiments::load_scenario(&args.common.scenario)?;
            let grid = args
                .grid_dbw
                .clone()
                .unwrap_or_else(experiments::default_total_power_grid_dbw);
            let manifest = experiments::sweep_total_power(
                &scenario,
                &args.common.experiment_config(),
                &grid,
                &args.common.out,
            )?;
            (&args.common, manifest)
        }
        Command::SweepP0(args) => {
            let scenario = experiments::load_scenario(&args.common.scenario)?;
            let grid = args
                .grid_dbw
                .clone()
                .unwrap_or_else(experiments::default_static_power_grid_dbw);
            let manifest = experiments::sweep_static_power(
                &scenario,
                &args.common.experiment_config(),
                &grid,
                &args.common.out,
            )?;
            (&args.common, manifest)
        }
    };

    for output in &manifest.outputs {
        println!("wrote {output}");
    }
    println!(
        "wrote {}",
        common.out.join("run_manifest.json").display()
    );
    if let Some(best) = manifest.best_total_power_dbw {
        println!("best mean efficiency at {best} dBW");
    }
    if let Some(falling) = manifest.efficiency_decreases_with_static_power {
        println!(
            "mean efficiency {} with static power",
            if falling { "falls monotonically" } else { "is not monotone" }
        );
    }
    println!("done in {:.1}s", manifest.wall_seconds);
    Ok(())
}
