//! Command-line front end. Every subcommand writes into its own `--out`
//! directory together with a `manifest.json` that `replay` can re-run.

mod commands;
mod manifest;
mod texts;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use manifest::{RunManifest, MANIFEST_NAME};
pub use texts::{read_texts, write_texts, TextItem};

use crate::Error;

/// Exit status for bad flags or flag combinations.
pub const EXIT_USAGE: i32 = 1;
/// Exit status for unreadable or invalid data.
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "burstlab", version, about = "Burst sampling and human-vs-synthetic text analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write the built-in synthetic sample corpus.
    SampleCorpus(SampleCorpusArgs),
    /// Subset, truncate and split documents into (prefix, full) pairs.
    Prepare(PrepareArgs),
    /// Train the n-gram backbone.
    Train(TrainArgs),
    /// Learn the burst-sampling bin distribution from a corpus subset.
    LearnBins(LearnBinsArgs),
    /// Generate continuations for prepared prefixes.
    Generate(GenerateArgs),
    /// Score texts (or ingest probability records) into a metric table.
    Score(ScoreArgs),
    /// KS separation of synthetic metric tables from a real one.
    Separate(SeparateArgs),
    /// Train a logistic-regression real-vs-synthetic detector.
    Detect(DetectArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SampleCorpusArgs {
    #[arg(long, default_value_t = 1000)]
    pub docs: usize,
    /// Move the last N documents into `heldout.jsonl`.
    #[arg(long, default_value_t = 0)]
    pub holdout: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepareArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub max_chars: usize,
    /// Random subset size; all documents when omitted.
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value_t = 0.10, conflicts_with = "leading_words")]
    pub prefix_fraction: f64,
    /// Use the first N words as prefix instead of a character fraction.
    #[arg(long)]
    pub leading_words: Option<usize>,
    /// Pick one random paragraph per document.
    #[arg(long)]
    pub paragraphs: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 5000)]
    pub vocab_cap: usize,
    #[arg(long, default_value_t = 1)]
    pub min_count: u64,
    /// Train on a random subset of this many documents.
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LearnBinsArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub subset: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Greedy,
    Temp,
    Topk,
    Topp,
    Burst,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum)]
    pub strategy: StrategyKind,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    /// Bin distribution file from `learn-bins` (burst only).
    #[arg(long)]
    pub theta: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long, conflicts_with = "records", required_unless_present = "records", requires = "texts")]
    pub model: Option<PathBuf>,
    /// Probability record file produced outside this tool.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub texts: Option<PathBuf>,
    #[arg(long, default_value = "k=40,k=50")]
    pub nucleus_specs: String,
    /// Score the prefix tokens too, not only the continuation.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub include_prefix: bool,
    /// Source label for rows that carry none.
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub no_self_bleu: bool,
    #[arg(long, default_value_t = 1000)]
    pub self_bleu_refs: usize,
    #[arg(long, default_value_t = 4)]
    pub self_bleu_max_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SeparateArgs {
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long, num_args = 1.., required = true)]
    pub synth: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureArg {
    Gltr,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long)]
    pub synth: PathBuf,
    #[arg(long, value_enum, default_value_t = FeatureArg::All)]
    pub features: FeatureArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub l2: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write into this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, split by exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "error: {e}"),
        }
    }
}

/// Parses `argv` (program name first), runs the command, and returns the
/// process exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match commands::dispatch(cli.command, args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Data(_) => EXIT_DATA,
            }
        }
    }
}
