use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "stereoreader",
    version,
    about = "Character-relationship extraction from teleplays"
)]
pub struct Cli {
    /// Global seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,

    /// Worker threads. 1 keeps runs bit-reproducible.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse teleplays into a scene corpus.
    Parse(ParseArgs),
    /// Map speaker labels to roster names.
    Canonicalize(CanonicalizeArgs),
    /// Build labeled dyad instances.
    Build(BuildArgs),
    /// Per-split corpus statistics.
    Stats(StatsArgs),
    /// Train the reader model.
    Train(TrainArgs),
    /// Predict with a trained model.
    Predict(PredictArgs),
    /// Render chat prompts for instances.
    Prompt(PromptArgs),
    /// Send prompts to a chat-completions endpoint.
    Infer(InferArgs),
    /// Normalize an external prediction file.
    Ingest(IngestArgs),
    /// Accuracy with bootstrap intervals, and agreement.
    Evaluate(EvaluateArgs),
    /// Post-hoc analyses of predictions.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Text,
    OcrJson,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Directory of scripts (`*.txt` or `*.jsonl`); the file stem is the title id.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: InputFormat,
    #[arg(long)]
    pub tolerance: Option<usize>,
    /// OCR units per character column.
    #[arg(long)]
    pub char_width: Option<f64>,
    /// Tab-separated `title_id<TAB>split` assignments.
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CanonicalizeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Roster file, one `{"title_id", "characters"}` object per line.
    #[arg(long, conflicts_with = "tmdb", required_unless_present = "tmdb")]
    pub roster: Option<PathBuf>,
    /// Fetch rosters from TMDb (needs TMDB_API_KEY).
    #[arg(long)]
    pub tmdb: bool,
    /// Directory caching TMDb responses.
    #[arg(long, requires = "tmdb")]
    pub tmdb_cache: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub relations: PathBuf,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Replace character names with seeded ENTITY ids.
    #[arg(long, requires = "lexicon")]
    pub anonymize: bool,
    /// `{"title_id", "season", "episode"}` records.
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    /// Keep only titles assigned to this split.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    /// Also write the table as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskArg {
    Additive,
    Multiplicative,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub warmup_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long, value_enum)]
    pub mask_mode: Option<MaskArg>,
    /// Classify from the head and tail states alone.
    #[arg(long)]
    pub no_pooling: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    #[arg(long)]
    pub instances: PathBuf,
    /// zero, one or reasoning.
    #[arg(long, default_value = "zero")]
    pub mode: String,
    #[arg(long)]
    pub max_scene_tokens: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub prompts: PathBuf,
    /// Concurrent requests.
    #[arg(long)]
    pub in_flight: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub file: PathBuf,
    /// Instances the predictions should cover; unknown keys are reported.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// model_id for records that carry none.
    #[arg(long, default_value = "external")]
    pub model_id: String,
    /// Normalized prediction records.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Majority,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, requires = "train")]
    pub baseline: Option<BaselineArg>,
    /// Instances the baseline is fit on.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Second prediction file: accuracy plus Cohen's kappa against `--preds`.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long)]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub level: Option<f64>,
    /// Also write the report to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Words that set one relation type apart in head utterances.
    DistinctWords(DistinctWordsArgs),
    /// Per-season relation shares for a dyad, as CSV and SVG heatmaps.
    Arc(ArcArgs),
    /// How predictions for a dyad depart from its gold label.
    Subversion(SubversionArgs),
}

#[derive(Debug, Args)]
pub struct DistinctWordsArgs {
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    /// predicted or true.
    #[arg(long, default_value = "predicted")]
    pub by: String,
    #[arg(long = "type")]
    pub relation: String,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Flat Dirichlet prior with this α instead of the informative prior.
    #[arg(long)]
    pub flat_prior: Option<f64>,
    /// Keep stopwords.
    #[arg(long)]
    pub keep_stopwords: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ArcArgs {
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    /// "HEAD,TAIL".
    #[arg(long)]
    pub dyad: String,
    /// Keep (head, tail) and (tail, head) apart.
    #[arg(long)]
    pub directed: bool,
    /// Relation types shown in the heatmap.
    #[arg(long, default_value_t = 6)]
    pub top_n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SubversionArgs {
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    /// "HEAD,TAIL".
    #[arg(long)]
    pub dyad: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
