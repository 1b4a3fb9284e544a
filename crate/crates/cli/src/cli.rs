use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Conditional logit demand estimation from censored sales transactions.
#[derive(Debug, Parser)]
#[command(name = "rmm", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Code alternatives and choice sets and write the canonical dataset.
    Reshape(ReshapeArgs),
    /// Fit the model to a reshaped dataset and write a model file.
    Fit(FitArgs),
    /// Score new offers under a fitted model.
    Predict(PredictArgs),
    /// Generate synthetic censored data, optionally with a recovery study.
    Simulate(SimulateArgs),
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "\\t" | "tab" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!(
            "delimiter must be a single ASCII character, got `{s}`"
        )),
    }
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Field delimiter of delimited text files.
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    pub delimiter: u8,
}

#[derive(Debug, Args)]
pub struct ReshapeArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub idvar: String,
    #[arg(long)]
    pub resp: String,
    #[arg(long)]
    pub alts: String,
    /// Alternative-specific variable; repeat for several.
    #[arg(long, required = true)]
    pub asv: Vec<String>,
    /// Wide layout: column holding the chosen alternative's code.
    #[arg(long)]
    pub alts_code: Option<String>,
    /// Wide layout: column holding the `|`-delimited choice set.
    #[arg(long)]
    pub choice_set: Option<String>,
    /// Wide layout: column holding the choice set's code.
    #[arg(long)]
    pub choice_set_code: Option<String>,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_obs: u64,
    /// Drop exact duplicate rows instead of rejecting them.
    #[arg(long)]
    pub dedup: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Assumed market share, in (0,1).
    #[arg(long, default_value_t = 0.7)]
    pub prop: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub set_code: u32,
    /// Take the most probable alternative (default).
    #[arg(long, conflicts_with = "sampled")]
    pub fixed: bool,
    /// Draw each decision in proportion to the probabilities.
    #[arg(long)]
    pub sampled: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also report the no-purchase probability.
    #[arg(long)]
    pub no_purchase: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run a recovery study with this many replications.
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    pub delimiter: u8,
}
