use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use heatroute_core::simulation::Mode;

#[derive(Debug, Parser)]
#[command(
    name = "heatroute",
    version,
    about = "Persona-conditioned heat-adaptive pedestrian routing simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic street grid and its mock scene features.
    GenerateGrid(GridArgs),
    /// Check a network (and optionally scenes, personas or a scenario).
    Validate(ValidateArgs),
    /// Score scenes for personas and write one JSON line per result.
    Score(ScoreArgs),
    /// Run a scenario: episodes, routes, ledger and manifest.
    Simulate(SimulateArgs),
    /// Compare simulated routes and scores with reference data.
    Evaluate(EvaluateArgs),
    /// Summarize a simulation output directory.
    Report(ReportArgs),
    /// Persona utilities.
    Personas {
        #[command(subcommand)]
        command: PersonasCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PatternArg {
    Uniform,
    ShadedPerimeter,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    WholeRoute,
    Stepwise,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::WholeRoute => Mode::WholeRoute,
            ModeArg::Stepwise => Mode::Stepwise,
        }
    }
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub cols: usize,
    #[arg(long, default_value_t = 100.0)]
    pub spacing: f64,
    #[arg(long, value_enum, default_value_t = PatternArg::ShadedPerimeter)]
    pub pattern: PatternArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for network.json and scenes.json.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, required_unless_present = "scenario")]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    #[arg(long)]
    pub personas: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct BackendArgs {
    /// `mock` or `remote`.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Persistent score cache (NDJSON).
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Scene feature table; its keys are the scenes scored.
    #[arg(long)]
    pub scenes: PathBuf,
    /// `builtin` or a persona JSON file.
    #[arg(long, default_value = "builtin")]
    pub personas: String,
    /// Only these personas (repeatable).
    #[arg(long = "persona")]
    pub persona: Vec<String>,
    /// Only these scenes (repeatable).
    #[arg(long = "scene")]
    pub scene: Vec<String>,
    #[command(flatten)]
    pub backend: BackendArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Use this λ for every persona.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Worker threads; defaults to the available processors.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Earlier memory log to start from.
    #[arg(long)]
    pub memory: Option<PathBuf>,
    #[command(flatten)]
    pub backend: BackendArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Episode log written by `simulate`.
    #[arg(long)]
    pub episodes: PathBuf,
    /// Human ratings CSV: scenario_id,gender,age,income,rating.
    #[arg(long)]
    pub ratings: Option<PathBuf>,
    /// Reference routes JSON.
    #[arg(long)]
    pub references: Option<PathBuf>,
    /// Agent scores written by `score`.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, default_value = "builtin")]
    pub personas: String,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 30.0)]
    pub turn_threshold: f64,
    #[arg(long, default_value = "eval")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Output directory of `simulate`.
    #[arg(long)]
    pub run: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PersonasCommand {
    /// Print the personas with their derived traits.
    List {
        #[arg(long, default_value = "builtin")]
        personas: String,
        /// One JSON object per line instead of a table.
        #[arg(long)]
        json: bool,
    },
}
