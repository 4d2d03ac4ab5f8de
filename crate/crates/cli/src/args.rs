use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ingtag_core::{Hyper, ScoreFn};

use crate::convert::Dialect;

/// Label every token of an ingredient phrase with its attribute class.
#[derive(Debug, Parser)]
#[command(name = "ingtag", version, args_override_self = true)]
pub struct Cli {
    /// Root for relative corpus and embedding paths.
    #[arg(long, global = true, env = "INGTAG_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rewrite a dataset file as a canonical token/POS/label TSV.
    Convert(ConvertArgs),
    /// Train the attention tagger (or the CRF baseline) and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on labelled test data.
    Eval(EvalArgs),
    /// Label new phrases and print structured records.
    Parse(ParseArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Dataset file to read.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "canonical")]
    pub dialect: Dialect,
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    /// Extra label spelling, as RAW=LABEL (repeatable).
    #[arg(long = "label-alias", value_name = "RAW=LABEL")]
    pub label_alias: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreArg {
    ScaledDot,
    Additive,
}

impl From<ScoreArg> for ScoreFn {
    fn from(s: ScoreArg) -> Self {
        match s {
            ScoreArg::ScaledDot => ScoreFn::ScaledDot,
            ScoreArg::Additive => ScoreFn::Additive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Crf,
}

/// Model and optimizer settings.
#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    /// Number of self-attention layers.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    pub n_layers: u32,
    /// Adam learning rate.
    #[arg(long, default_value_t = 5e-5)]
    pub learning_rate: f64,
    /// Phrases per optimizer step.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub batch_size: u32,
    /// Inverted-dropout rate after each feed-forward map.
    #[arg(long, default_value_t = 0.1)]
    pub dropout: f64,
    #[arg(long, default_value_t = 20)]
    pub max_epochs: usize,
    /// Epochs without dev improvement before stopping.
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    /// Seed for initialization, shuffling and dropout.
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "scaled-dot")]
    pub score_fn: ScoreArg,
    /// Add residual connections around attention and feed-forward.
    #[arg(long)]
    pub residual: bool,
    /// Add sinusoidal position vectors to the input.
    #[arg(long)]
    pub positional: bool,
    /// Embedding and hidden width; must match the embedding file.
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u32).range(1..))]
    pub dim: u32,
    /// Drop the learned query/key/value projections.
    #[arg(long)]
    pub no_qkv: bool,
    /// ReLU after the feed-forward linear map.
    #[arg(long)]
    pub ffn_relu: bool,
    /// Update pretrained word vectors during training.
    #[arg(long)]
    pub tune_embeddings: bool,
}

impl HyperArgs {
    pub fn hyper(&self) -> Hyper {
        Hyper {
            n_layers: self.n_layers as usize,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size as usize,
            dropout_rate: self.dropout,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            score_fn: self.score_fn.into(),
            residual: self.residual,
            positional: self.positional,
            dim: self.dim as usize,
            qkv: !self.no_qkv,
            ffn_relu: self.ffn_relu,
            tune_embeddings: self.tune_embeddings,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training corpus (repeatable; files are concatenated).
    #[arg(long, required = true, value_name = "PATH")]
    pub data: Vec<PathBuf>,
    /// Dev corpus; when absent a dev split is carved from the training data.
    #[arg(long, value_name = "PATH")]
    pub dev: Vec<PathBuf>,
    /// Fraction of training phrases held out for dev when --dev is absent.
    #[arg(long, default_value_t = 0.1)]
    pub dev_fraction: f64,
    /// Seed of the train/dev split.
    #[arg(long, default_value_t = 13)]
    pub split_seed: u64,
    /// Test corpus scored after training; the result goes to the log.
    #[arg(long, value_name = "PATH")]
    pub test: Vec<PathBuf>,
    /// Pretrained word vectors (`TOKEN v1 .. vD` per line). Without them
    /// every word gets a small random trainable vector.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    /// Where to write the checkpoint.
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    /// Training log (JSON lines, appended) [default: <checkpoint>.log.jsonl].
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
    /// Record per-epoch wall time in the log (makes logs differ between runs).
    #[arg(long)]
    pub wall_time: bool,
    /// Train a baseline instead of the attention tagger.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    /// Perceptron epochs for the CRF baseline.
    #[arg(long, default_value_t = 10)]
    pub crf_epochs: usize,
    /// Extra label spelling, as RAW=LABEL (repeatable).
    #[arg(long = "label-alias", value_name = "RAW=LABEL")]
    pub label_alias: Vec<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint to score; with --grid give one per training set.
    #[arg(long, required = true, value_name = "PATH")]
    pub checkpoint: Vec<PathBuf>,
    /// Labelled test corpus; with --grid give one per test set.
    #[arg(long, required = true, value_name = "PATH")]
    pub test: Vec<PathBuf>,
    /// Score three checkpoints against three test sets and print the
    /// micro-F1 grid.
    #[arg(long)]
    pub grid: bool,
    /// Checkpoints are CRF baselines.
    #[arg(long)]
    pub baseline: bool,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
    /// Extra word vectors for test words the checkpoint has not seen.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    /// Extra label spelling, as RAW=LABEL (repeatable).
    #[arg(long = "label-alias", value_name = "RAW=LABEL")]
    pub label_alias: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,
    /// Phrase to parse; without it and without --file, phrases are read
    /// from standard input, one per line.
    pub phrase: Option<String>,
    /// File with one phrase per line.
    #[arg(long, value_name = "PATH", conflicts_with = "phrase")]
    pub file: Option<PathBuf>,
    /// One JSON record per phrase.
    #[arg(long)]
    pub json: bool,
    /// Extra word vectors for words the checkpoint has not seen.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
}
