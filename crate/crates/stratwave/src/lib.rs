//! Configuration, file formats and experiment drivers for `stratwave-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod wavefile;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{ExperimentConfig, GridSize};
use crate::error::CliError;
use crate::output::Outputs;

#[derive(Debug, Parser)]
#[command(name = "stratwave", version, about = "Steady periodic stratified water waves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Grid as NXxNZ, overriding the configuration.
    #[arg(long, global = true, value_parser = parse_grid)]
    pub grid: Option<GridSize>,
    /// Seed for randomized sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

fn parse_grid(text: &str) -> Result<GridSize, String> {
    GridSize::parse(text).map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wave speed of the density and its offset from the uniform fluid.
    Speed,
    /// Critical Richardson number and the critical mode.
    Crit,
    /// Continue the wave branch from bifurcation to the configured amplitude.
    Solve,
    /// Piecewise-constant approximations of the density.
    ApproxLayers,
    /// Distances between layered waves and the reference wave.
    Converge,
    /// Height, velocity and pressure of a wave.
    Pressure {
        /// Wave file written by `solve`; solved afresh when absent.
        #[arg(long)]
        wave: Option<PathBuf>,
    },
    /// Round-trip checks between the wave descriptions.
    Transform {
        #[arg(long)]
        wave: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Speed => "speed",
            Self::Crit => "crit",
            Self::Solve => "solve",
            Self::ApproxLayers => "approx-layers",
            Self::Converge => "converge",
            Self::Pressure { .. } => "pressure",
            Self::Transform { .. } => "transform",
        }
    }
}

/// Runs one command; on failure every file it wrote is removed.
pub fn run(cli: &Cli) -> Result<commands::Report, CliError> {
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("stratwave-out").join(cli.command.name()));
    let seed = cli.seed.unwrap_or(config.seed);
    let mut out = Outputs::new(&out_dir)?;
    let wave_grid = cli.grid.unwrap_or(config.wave.grid);
    let report = match &cli.command {
        Command::Speed => commands::speed(&config, &mut out),
        Command::Crit => commands::crit(&config, &mut out),
        Command::Solve => commands::solve(&config, wave_grid, &mut out),
        Command::ApproxLayers => commands::approx_layers(&config, &mut out),
        Command::Converge => commands::converge(&config, cli.grid.unwrap_or(config.study.grid), &mut out),
        Command::Pressure { wave } => commands::pressure(&config, wave_grid, wave.as_deref(), &mut out),
        Command::Transform { wave } => commands::transform(&config, wave_grid, wave.as_deref(), seed, &mut out),
    }?;
    out.commit();
    Ok(report)
}
