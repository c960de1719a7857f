use std::path::PathBuf;

use annodiff::corpus::LabelType;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::CommandPlan;

#[derive(Debug, Parser)]
#[command(name = "annodiff", version, about = "Annotation difficulty toolkit")]
pub struct Cli {
    /// Worker threads for parallel stages (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus (JSONL or a directory of .txt files) and annotations.
    Ingest(IngestArgs),
    /// Generate a synthetic corpus with planted difficulty.
    Synth(SynthArgs),
    /// Per-sentence difficulty of crowd annotations against a reference.
    Score(ScoreArgs),
    /// Out-of-fold tagger predictions to use as a proxy reference.
    Proxy(ProxyArgs),
    /// Inter-annotator agreement.
    Agree(AgreeArgs),
    /// Fit a difficulty regressor.
    TrainDifficulty(TrainDifficultyArgs),
    /// Predict difficulty with a trained regressor.
    PredictDifficulty(PredictDifficultyArgs),
    /// Train a CRF tagger, optionally difficulty-aware.
    TrainTagger(TrainTaggerArgs),
    /// Choose documents for expert re-annotation.
    Route(RouteArgs),
    /// Replace crowd annotation with expert annotation on routed documents.
    Merge(MergeArgs),
    /// Tagger quality as a function of expert budget.
    Curve(CurveArgs),
    /// Evaluate a trained tagger.
    Report(ReportArgs),
    /// Paired sign test between two reports.
    SignTest(SignTestArgs),
}

impl Command {
    pub fn plan(&self) -> CommandPlan {
        match self {
            Command::Ingest(a) => CommandPlan::new("ingest", a, None),
            Command::Synth(a) => CommandPlan::new("synth", a, Some(a.seed)),
            Command::Score(a) => CommandPlan::new("score", a, None),
            Command::Proxy(a) => CommandPlan::new("proxy", a, Some(a.seed)),
            Command::Agree(a) => CommandPlan::new("agree", a, None),
            Command::TrainDifficulty(a) => CommandPlan::new("train-difficulty", a, Some(a.seed)),
            Command::PredictDifficulty(a) => CommandPlan::new("predict-difficulty", a, None),
            Command::TrainTagger(a) => CommandPlan::new("train-tagger", a, Some(a.seed)),
            Command::Route(a) => CommandPlan::new("route", a, Some(a.seed)),
            Command::Merge(a) => CommandPlan::new("merge", a, None),
            Command::Curve(a) => CommandPlan::new("curve", a, Some(a.seed)),
            Command::Report(a) => CommandPlan::new("report", a, None),
            Command::SignTest(a) => CommandPlan::new("sign-test", a, None),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Small,
    Medium,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PerWorkerMean,
    Aggregate,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupArg {
    Crowd,
    Expert,
    Model,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    LinearNgram,
    DenseEmbed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyArg {
    None,
    Remove,
    RandomRemove,
    Reweight,
    Agreement,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdArg {
    Score,
    Percentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingArg {
    TopDifficulty,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct TaggerArgs {
    #[arg(long, default_value_t = 15)]
    pub epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    /// L2 penalty on tagger weights.
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
}

/// Deterministic document split; without `--holdout` the whole corpus is used.
#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    /// Fraction of documents held out for evaluation.
    #[arg(long)]
    pub holdout: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["corpus", "text_dir"])))]
pub struct IngestArgs {
    /// Corpus JSONL file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Directory of plain-text documents; the file stem becomes the doc id.
    #[arg(long)]
    pub text_dir: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Small)]
    pub preset: Preset,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("reference_source").required(true).args(["reference", "ref_from_model"])))]
pub struct ScoreArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub crowd: Vec<PathBuf>,
    /// Reference (e.g. expert) annotation files.
    #[arg(long = "ref", num_args = 1..)]
    pub reference: Vec<PathBuf>,
    /// Model predictions used as the reference (e.g. from `proxy`).
    #[arg(long, num_args = 1..)]
    pub ref_from_model: Vec<PathBuf>,
    #[arg(long)]
    pub label: LabelType,
    #[arg(long, value_enum, default_value_t = Mode::PerWorkerMean)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ProxyArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub crowd: Vec<PathBuf>,
    /// Label type; all three when omitted.
    #[arg(long)]
    pub label: Option<LabelType>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AgreeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub layers: Vec<PathBuf>,
    /// Label type; all three when omitted.
    #[arg(long)]
    pub label: Option<LabelType>,
    /// Only layers of this group.
    #[arg(long, value_enum)]
    pub group: Option<GroupArg>,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainDifficultyArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Difficulty records to fit.
    #[arg(long)]
    pub scores: PathBuf,
    /// Label type; required when the scores mix label types.
    #[arg(long)]
    pub label: Option<LabelType>,
    #[arg(long, value_enum, default_value_t = Kind::LinearNgram)]
    pub kind: Kind,
    /// Word vectors, one "token v1 ... vd" line each (dense_embed only).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1 << 20)]
    pub hash_dim: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub l2: f64,
    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    /// Pick the L2 strength and learning rate (and hidden size) by k-fold grid search.
    #[arg(long)]
    pub grid: bool,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictDifficultyArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Jsonl)]
    pub format: Format,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainTaggerArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Training annotation files; tags are the per-token majority.
    #[arg(long, required = true, num_args = 1..)]
    pub layers: Vec<PathBuf>,
    #[arg(long)]
    pub label: LabelType,
    #[arg(long, value_enum, default_value_t = StrategyArg::None)]
    pub strategy: StrategyArg,
    /// Difficulty records (required by remove and reweight).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Fraction removed by remove / random-remove.
    #[arg(long, default_value_t = 0.04)]
    pub fraction: f64,
    #[arg(long, default_value_t = 0.8)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.5)]
    pub a: f64,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Score)]
    pub threshold_mode: ThresholdArg,
    /// Gold annotation files; with --holdout a report on held-out documents is written.
    #[arg(long, num_args = 1..)]
    pub gold: Vec<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RouteArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Difficulty records (required by top-difficulty).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Only use scores of this label type.
    #[arg(long)]
    pub label: Option<LabelType>,
    /// Number of documents to route.
    #[arg(long)]
    pub budget: usize,
    #[arg(long, default_value_t = 5.0)]
    pub percentile: f64,
    #[arg(long, value_enum, default_value_t = RoutingArg::TopDifficulty)]
    pub strategy: RoutingArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MergeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub crowd: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    pub expert: Vec<PathBuf>,
    /// Routing plan written by `route`.
    #[arg(long)]
    pub routing: PathBuf,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub crowd: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    pub expert: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    pub gold: Vec<PathBuf>,
    #[arg(long)]
    pub label: LabelType,
    /// Ascending document counts, comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub budgets: Vec<usize>,
    /// Difficulty records for routing; proxy scores are computed when absent.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RoutingArg::TopDifficulty)]
    pub routing: RoutingArg,
    #[arg(long, default_value_t = 5.0)]
    pub percentile: f64,
    /// Folds for proxy scoring.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Fraction of documents held out for evaluation.
    #[arg(long, default_value_t = 0.2)]
    pub holdout: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[command(flatten)]
    pub tagger: TaggerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Tagger written by `train-tagger`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub gold: Vec<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Another report; adds a sign-test p-value against it.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SignTestArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Output directory (not part of the plan echo).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
