use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "WMDLD_SEED";

#[derive(Parser, Debug)]
#[command(name = "wmdld", version, about = "Sparse directional source separation of instantaneous mixtures")]
pub struct Cli {
    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mix mono sources with an angle-parameterized matrix.
    Mix(MixArgs),
    /// Separate a multichannel mixture into mono source estimates.
    Separate(SeparateArgs),
    /// Score estimates against references (SDR/SIR/SAR).
    Evaluate(EvaluateArgs),
    /// Export the angle histogram of selected points of a stereo mixture.
    Hist(HistArgs),
    /// Write synthetic sparse test sources.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct MixArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub sources: Vec<PathBuf>,
    /// One angle per source in degrees, comma separated; for K > 2 give
    /// K-1 such lists separated by ';' (e.g. "0,-87,-60,0,45;85,0,-60,0,45").
    #[arg(long, allow_hyphen_values = true)]
    pub angles: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Rescale the mixture so its peak equals this value.
    #[arg(long)]
    pub normalize: Option<f64>,
    /// Recorded in the sidecar; mixing itself is deterministic.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Speech,
    Music,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    /// Weighted mixture (proximity weights).
    Wmdld,
    /// Plain mixture, all weights 1.
    Mdld,
}

/// Analysis flags shared by `separate` and `hist`.
#[derive(Args, Debug, Clone)]
pub struct AnalysisArgs {
    #[arg(long, value_enum, default_value_t = Material::Speech)]
    pub material: Material,
    /// Frame length in milliseconds; defaults from --material and the sample rate.
    #[arg(long)]
    pub frame_ms: Option<f64>,
    /// Neighborhood side length; defaults to 2 for speech, 3 for music.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, default_value_t = 300.0)]
    pub conf_threshold: f64,
}

#[derive(Args, Debug)]
pub struct SeparateArgs {
    #[arg(long, required_unless_present = "config")]
    pub input: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub num_sources: Option<usize>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Wmdld)]
    pub mode: ModeArg,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 15.0)]
    pub k_init: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step_scale: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Re-run from a `config.json` written by an earlier run; other
    /// analysis flags are ignored.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimates: PathBuf,
    #[arg(long)]
    pub references: PathBuf,
    /// JSON report; a CSV with the same stem is written beside it.
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HistMethod {
    Confidence,
    Norm,
}

#[derive(Args, Debug)]
pub struct HistArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 180)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = HistMethod::Confidence)]
    pub method: HistMethod,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Magnitude threshold for --method norm; by default chosen so the
    /// point count matches the confidence selection.
    #[arg(long)]
    pub norm_threshold: Option<f64>,
    /// Minimum points for the confidence selection fallback.
    #[arg(long, default_value_t = 400)]
    pub min_points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub num_sources: usize,
    #[arg(long, default_value_t = 10.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 16000)]
    pub rate: u32,
    #[arg(long, default_value_t = 0.1)]
    pub shared_fraction: f64,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}
