mod commands;
mod failure;
mod imageio;
mod overrides;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::Failure;

/// Wavenumber coverage, simulation, imaging and fusion for multistatic
/// radar scenarios.
#[derive(Debug, Parser)]
#[command(name = "wavesense", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "WAVESENSE_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Scenario override `key=value`; dotted paths reach nested fields.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Replaces the scenario's noise seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dynamic range of PGM rasters, dB.
    #[arg(long = "dyn-range", global = true, default_value_t = 40.0)]
    pub dyn_range: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wavenumber coverage, hull and predicted resolution.
    Coverage(CoverageArgs),
    /// Synthesized signal records of every active channel.
    Simulate(GridArgs),
    /// Back-projected image of every active pair.
    Image(ImageArgs),
    /// Fused image and its quality metrics.
    Fuse(FuseArgs),
    /// Tessellated placement plan and its end-to-end fused image.
    Orchestrate(OrchestrateArgs),
    /// Summary of the metrics found under a directory of runs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Scene point `x,y`; defaults to the first target.
    #[arg(long, value_parser = parse_point)]
    pub target: Option<(f64, f64)>,
    /// Frequencies per channel.
    #[arg(long, default_value_t = 64)]
    pub n_freq: usize,
    /// Shift every tile by its pair's centre wavevector.
    #[arg(long)]
    pub baseband: bool,
}

#[derive(Debug, Args, Clone)]
pub struct GridArgs {
    /// Margin around the targets, m.
    #[arg(long, default_value_t = 4.0)]
    pub margin: f64,
    /// Pixel spacing, m; defaults to a quarter of the finer predicted resolution.
    #[arg(long)]
    pub spacing: Option<f64>,
}

#[derive(Debug, Args, Clone)]
pub struct ImageArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Interp::Linear)]
    pub interp: Interp,
    /// Back-projection worker threads; all cores when omitted.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Interp {
    Linear,
    Sinc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Incoherent,
    Coherent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weights {
    Uniform,
    Density,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub image: ImageArgs,
    #[arg(long, value_enum, default_value_t = Mode::Coherent)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Weights::Uniform)]
    pub weights: Weights,
    /// Directory written by `image`; its pair images are fused instead of
    /// imaging the scenario.
    #[arg(long)]
    pub images: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OrchestrateArgs {
    #[command(flatten)]
    pub image: ImageArgs,
    /// Number of terminals to place.
    #[arg(long = "L")]
    pub l: usize,
    /// Bandwidth, Hz; defaults to the scenario's.
    #[arg(long = "B")]
    pub b: Option<f64>,
    /// Observation angle of the first terminal, degrees.
    #[arg(long = "psi0-deg", default_value_t = 90.0)]
    pub psi0_deg: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory searched recursively for `metrics.json` files.
    #[arg(long)]
    pub runs: PathBuf,
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `x,y`")?;
    let x = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((x, y))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if !err.use_stderr() {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            return Failure::usage(err.to_string()).report();
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
