use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Seed used when neither `--seed` nor `RATCHET_SEED` is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "ratchet", version, about = "Simulation and numerics for Muller's ratchet")]
pub struct Cli {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print derived parameters (theta, pi0, gamma, tau, Haigh's click time).
    Derive(DeriveArgs),
    /// Wright-Fisher forward simulation.
    Wf(WfArgs),
    /// Truncated Fleming-Viot simulation with moment diagnostics.
    Fv(FvArgs),
    /// Deterministic infinite-population evolution.
    Det(DetArgs),
    /// One-dimensional click process for the best class.
    Diff1d(Diff1dArgs),
    /// Green function and expected click time of a diffusion.
    Green(GreenArgs),
    /// Click rate against N*lambda at fixed gamma, with a log-log fit.
    Sweep(SweepArgs),
    /// Click rate against gamma at fixed N*lambda.
    RateVsGamma(RateVsGammaArgs),
    /// Regression of M1 on Y0 in the Wright-Fisher stationary regime.
    Phase(PhaseArgs),
    /// Occupation density of the best class between clicks.
    Occupation(OccupationArgs),
    /// Histogram of the new best-class frequency at click times.
    ClickHist(ClickHistArgs),
    /// Render columns of a CSV file as an SVG chart.
    Plot(PlotArgs),
}

/// Population size, mutation rate and selection (`--s` or `--gamma`).
#[derive(Debug, Clone, Args, Serialize)]
#[command(group(ArgGroup::new("selection").required(true).args(["s", "gamma"])))]
pub struct ModelArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Selection coefficient.
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Solve for s from gamma = N*lambda / (N*s*ln(N*lambda)).
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RunArgs {
    #[arg(long, env = "RATCHET_SEED")]
    pub seed: Option<u64>,
    /// Artifacts are written to `{out}.{name}`.
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<String>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also render the main table as SVG.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DeriveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecorderArgs {
    /// Generations between (Y0, M1) samples.
    #[arg(long, default_value_t = 10)]
    pub scatter_interval: u64,
    /// Y0 histogram bin width (default pi0/50).
    #[arg(long)]
    pub hist_bin_width: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub generations: u64,
    #[command(flatten)]
    pub recorder: RecorderArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FvArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    pub generations: u64,
    /// Euler step; 1/dt must be an integer.
    #[arg(long, default_value_t = ratchet_core::forward_sim::DEFAULT_FV_DT)]
    pub dt: f64,
    #[command(flatten)]
    pub recorder: RecorderArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialProfile {
    /// Poisson with mean `--mu` (default theta).
    Poisson,
    /// The profile right after a click, (pi1, pi2, ...)/(1 - pi0).
    PiTilde,
    /// Best class at `--y0`, the rest Poisson(theta).
    Ppa,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = InitialProfile::Poisson)]
    pub init: InitialProfile,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    /// Final time in generations (default tau, or 1/s when theta <= 1).
    #[arg(long)]
    pub t: Option<f64>,
    /// Trajectory samples, evenly spaced on [0, t].
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Threshold {
    Zero,
    Half,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Diff1dArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// small-A, A=1, large-A, or a number A.
    #[arg(long, default_value = "A=1")]
    pub regime: String,
    #[arg(long, default_value_t = 1e6)]
    pub horizon: f64,
    #[arg(long, default_value_t = ratchet_core::diffusion1d::DEFAULT_DIFFUSION_DT)]
    pub dt: f64,
    /// Absorb at 0 or at half an individual.
    #[arg(long, value_enum, default_value_t = Threshold::Zero)]
    pub threshold: Threshold,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GreenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "A=1")]
    pub regime: String,
    /// Starting frequency (default: the regime's post-click value).
    #[arg(long)]
    pub x0: Option<f64>,
    /// Upper reflecting boundary (default min(1, 8 pi0)).
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulatorKind {
    Wf,
    Fv,
    Diffusion,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub generations: u64,
    #[arg(long, value_enum, default_value_t = SimulatorKind::Wf)]
    pub simulator: SimulatorKind,
    /// Regime for the diffusion simulator.
    #[arg(long, default_value = "A=1")]
    pub regime: String,
    /// Step for the fv and diffusion simulators.
    #[arg(long)]
    pub dt: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RateVsGammaArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub n_lambda: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub gammas: Vec<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub generations: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhaseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub generations: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OccupationArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "A=1")]
    pub regime: String,
    /// Clicks of the diffusion Monte Carlo.
    #[arg(long, default_value_t = 10_000)]
    pub clicks: u64,
    #[arg(long, default_value_t = ratchet_core::diffusion1d::DEFAULT_DIFFUSION_DT)]
    pub dt: f64,
    /// Also histogram a Wright-Fisher run of this many generations.
    #[arg(long)]
    pub wf_generations: Option<u64>,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClickHistArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1000)]
    pub clicks: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_generations: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// CSV file to plot.
    pub input: PathBuf,
    /// Column for the horizontal axis (default: the first).
    #[arg(long)]
    pub x: Option<String>,
    /// Comma-separated columns to draw (default: all other numeric columns).
    #[arg(long, value_delimiter = ',')]
    pub y: Vec<String>,
    #[arg(long)]
    pub log_x: bool,
    #[arg(long)]
    pub log_y: bool,
    /// Points instead of lines.
    #[arg(long)]
    pub scatter: bool,
    /// Output path (default: the input with an .svg extension).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}
