use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use divlab_core::text::TokenizeMode;

#[derive(Debug, Parser)]
#[command(
    name = "divlab",
    version,
    about = "Diversity diagnostics and decoding experiments for text generation"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Seed for every random choice (partitions, sampling, initialization).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Token-class overrides, one `class<TAB>space-separated forms` per line.
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,

    /// Worker threads; does not affect output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Language side whose pronoun classes are used.
    #[arg(long, global = true, default_value = "english")]
    pub side: String,

    #[arg(long, global = true, value_parser = parse_mode, default_value = "whitespace")]
    pub tokenize: TokenizeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

fn parse_mode(s: &str) -> Result<TokenizeMode, String> {
    s.parse()
}

/// Comma-separated n-gram orders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orders(pub Vec<usize>);

fn parse_orders(s: &str) -> Result<Orders, String> {
    s.split(',')
        .map(|x| match x.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("bad order `{x}`")),
        })
        .collect::<Result<_, _>>()
        .map(Orders)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one output corpus against references.
    Panel(PanelArgs),
    /// Decode under a grid of temperatures and beam widths and score each.
    Sweep(SweepArgs),
    /// Fit an n-gram model or train a context model.
    TrainLm(TrainArgs),
    /// Decode source sentences with a model file.
    Decode(DecodeArgs),
    /// Train and evaluate a real-vs-generated classifier.
    Discriminate(DiscriminateArgs),
    /// L1 distance between two seeded halves of a corpus.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    #[arg(long)]
    pub src: PathBuf,
    /// Reference file; repeat for multiple references.
    #[arg(long = "ref", required = true)]
    pub refs: Vec<PathBuf>,
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long, value_parser = parse_orders, default_value = "1,5")]
    pub orders: Orders,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Model file (tabular, n-gram or context model).
    #[arg(long, conflicts_with = "fit", required_unless_present = "fit")]
    pub model: Option<PathBuf>,
    /// Fit an n-gram model to this corpus instead of loading one.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    /// History length of the fitted n-gram model.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Additive smoothing of the fitted n-gram model.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Settings such as `T=0,0.5,1.0;B=1,5,10`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long, value_parser = parse_orders, default_value = "1,5")]
    pub orders: Orders,
    /// Also write each setting's decoded lines into this directory.
    #[arg(long)]
    pub decoded_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Ngram,
    Trainable,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    /// History length (previous tokens in the state).
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub label_smoothing: f64,
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    /// Source lines aligned with the corpus; used as conditioning contexts.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    /// Train without end-of-sentence events; decoding then runs to the
    /// step budget.
    #[arg(long)]
    pub no_eos: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Sample,
    Greedy,
    Beam,
    /// Most probable sequence by exhaustive enumeration; small models only.
    Exact,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::Sample)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiscriminateArgs {
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 2)]
    pub min_df: usize,
    /// Persist the trained classifier.
    #[arg(long)]
    pub save_model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, value_parser = parse_orders, default_value = "1,5")]
    pub orders: Orders,
}
