use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wikies_core::query::Matcher;

#[derive(Debug, Parser)]
#[command(
    name = "wikies",
    version,
    about = "Learn, apply and evaluate concept-based document filtering rules"
)]
pub struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a rule from a labeled corpus.
    Train(TrainArgs),
    /// Learn a bag-of-words rule with exact token matching.
    Baseline(BaselineArgs),
    /// Print the ids of documents a rule classifies as relevant.
    Filter(FilterArgs),
    /// Score one or more rules on a labeled corpus.
    Eval(EvalArgs),
    /// Choose relatedness thresholds from a labeled corpus.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatcherArg {
    Wiki,
    Exact,
}

impl From<MatcherArg> for Matcher {
    fn from(m: MatcherArg) -> Self {
        match m {
            MatcherArg::Wiki => Matcher::WikiRelatedness,
            MatcherArg::Exact => Matcher::ExactToken,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    /// Relevance judgments as `topic<TAB>doc_id<TAB>0|1` lines.
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Topic to take from --qrels.
    #[arg(long)]
    pub topic: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Rule file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with algorithm parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in --config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `exact` trains on word tokens, the same as the baseline command.
    #[arg(long, value_enum, default_value = "wiki")]
    pub matcher: MatcherArg,
    /// Thresholds written by the calibrate command.
    #[arg(long)]
    pub sensitivity: Option<PathBuf>,
    #[command(flatten)]
    pub labels: LabelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub labels: LabelArgs,
}

impl From<BaselineArgs> for TrainArgs {
    fn from(b: BaselineArgs) -> Self {
        TrainArgs {
            graph: b.graph,
            corpus: b.corpus,
            out: b.out,
            config: b.config,
            seed: b.seed,
            matcher: MatcherArg::Exact,
            sensitivity: None,
            labels: b.labels,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub rule: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Append the vote of each matching document.
    #[arg(long)]
    pub with_scores: bool,
    /// Replace the rule's matcher.
    #[arg(long, value_enum)]
    pub matcher: Option<MatcherArg>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub rule: Option<PathBuf>,
    /// Further rules; prints the pairwise F-score comparison.
    #[arg(long, num_args = 0..)]
    pub compare: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Replace the matcher of every rule.
    #[arg(long, value_enum)]
    pub matcher: Option<MatcherArg>,
    #[command(flatten)]
    pub labels: LabelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Thresholds file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Supplies the terminal cap.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated candidates for the named-entity threshold.
    #[arg(long, value_delimiter = ',')]
    pub grid_c1: Option<Vec<f64>>,
    /// Comma-separated candidates for the general-concept threshold.
    #[arg(long, value_delimiter = ',')]
    pub grid_c2: Option<Vec<f64>>,
    #[command(flatten)]
    pub labels: LabelArgs,
}
