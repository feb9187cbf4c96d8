//! The `changeattr` command line: generate data, train a classifier, explain
//! its prediction changes and score the explanations.
//!
//! Every command reads an optional flat JSON object given with `--config`;
//! flags take precedence over it and built-in defaults fill the rest.

pub mod commands;
pub mod config;
pub mod error;
pub mod layout;
pub mod targets;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Map;

use config::{Dataset, ModelKind, SplitName};
use error::Result;
use layout::Layout;

pub use error::{code, CliError};

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  2  invalid command line
  3  missing input file
  4  malformed input (JSON, CSV, checkpoint or series schema)
  5  unknown attribution method
  6  invalid configuration or change target
  7  numerical failure (diverged training, singular kernel)
  8  other I/O error

Outputs go to <out>/data, <out>/models, <out>/attrib and <out>/reports.
Time indices are 0-based; the window ending at t covers rows t-W+1..=t.";

#[derive(Debug, Parser)]
#[command(
    name = "changeattr",
    version,
    about = "Attribute prediction changes of online time-series classifiers"
)]
#[command(after_help = AFTER_HELP)]
pub struct Cli {
    /// Root of the output tree.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Flat JSON object of settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with train/val/test splits.
    GenData(GenDataArgs),
    /// Train a classifier on the train split.
    Train(TrainArgs),
    /// Write attribution maps for sampled change targets.
    Attribute(TargetArgs),
    /// Score an attribution method with the removal metrics.
    Evaluate(EvaluateArgs),
    /// Join evaluated methods into one comparison table.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenDataArgs {
    /// [default: switch-feature]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<Dataset>,
    /// Output stem [default: the dataset name]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// [default: 100]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_series: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seq_len: Option<usize>,
    /// Window size recorded with the data [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Features of delayed-spike data [default: 3]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_features: Option<usize>,
    /// Train,val,test fractions [default: 0.6,0.2,0.2]
    #[arg(long, value_delimiter = ',', num_args = 3)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<Vec<f64>>,
    /// [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset stem or .jsonl path [default: switch-feature]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    /// Model stem [default: the dataset stem]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// [default: recurrent]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    /// [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Hidden width, ignored by affine [default: 16]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<usize>,
    /// [default: 20]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// [default: 0.05]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    /// [default: 32]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TargetArgs {
    /// Dataset stem or .jsonl path [default: switch-feature]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
    /// Model stem or .json path [default: the dataset stem]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// swing, rbs, ig-zero, occlusion or random [default: swing]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Integration points per path [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    /// Baseline offset d of swing and rbs [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
    /// t2 - t1 [default: 1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<usize>,
    /// [default: 5]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets_per_series: Option<usize>,
    /// Series to draw targets from [default: test]
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitName>,
    /// Seeds target sampling and the random method [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub targets: TargetArgs,
    /// Cells removed per sequence [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// forward-fill, zero or average [default: forward-fill]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substitution: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Methods to include, in order [default: every evaluated method]
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
}

impl Cli {
    pub fn run(&self) -> Result<()> {
        let file = match &self.config {
            Some(p) => config::load_file(p)?,
            None => Map::new(),
        };
        let out = Layout::new(&self.out);
        let job = || -> Result<()> {
            match &self.command {
                Command::GenData(a) => commands::gen_data(&out, &config::merge(&file, a)?),
                Command::Train(a) => commands::train(&out, &config::merge(&file, a)?),
                Command::Attribute(a) => commands::attribute(&out, &config::merge(&file, a)?),
                Command::Evaluate(a) => {
                    commands::evaluate(&out, &config::merge(&file, a)?).map(drop)
                }
                Command::Report(a) => commands::report(&out, &config::merge(&file, a)?),
            }
        };
        match self.jobs {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("--jobs: {e}")))?
                .install(job),
            None => job(),
        }
    }
}
