use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "survboost", version, about = "Competing-risks survival analysis with gradient-boosted trees")]
pub struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads. Defaults to the config file, then SURVBOOST_THREADS,
    /// then all cores. Results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Seed for every random choice (horizon sampling, splits, synthetic data).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Weibull competing-risks dataset and its oracle sidecar.
    Synth(SynthArgs),
    /// Fit a model and write it to a model file.
    Train(TrainArgs),
    /// Write predicted survival and CIFs on a time grid.
    Predict(PredictArgs),
    /// Score one or more model files on a labelled dataset.
    Evaluate(EvaluateArgs),
    /// Fit and compare SurvivalBoost and the marginal baselines.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Estimator {
    SurvivalBoost,
    AalenJohansen,
    KaplanMeier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CensoringArg {
    Feedback,
    KaplanMeier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CensoringModeArg {
    Independent,
    CovariateDependent,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SchemaArgs {
    /// Duration column name.
    #[arg(long)]
    pub duration_col: Option<String>,
    /// Event column name (0 = censored, 1..K = event type).
    #[arg(long)]
    pub event_col: Option<String>,
    /// Comma-separated feature columns; default is every other column.
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SynthOpts {
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub n_events: Option<u32>,
    #[arg(long)]
    pub n_features: Option<usize>,
    #[arg(long, value_enum)]
    pub censoring_mode: Option<CensoringModeArg>,
    /// Target fraction of censored rows.
    #[arg(long)]
    pub censoring_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoostOpts {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Boosting rounds.
    #[arg(long)]
    pub n_iterations: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub max_bins: Option<usize>,
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    #[arg(long)]
    pub l2_regularization: Option<f64>,
    /// Horizons sampled per row and round.
    #[arg(long)]
    pub n_horizons: Option<usize>,
    /// Event rounds between censoring-model updates.
    #[arg(long)]
    pub feedback_period: Option<usize>,
    #[arg(long, value_enum)]
    pub censoring: Option<CensoringArg>,
    /// Lower clip on the censoring survival inside weights.
    #[arg(long)]
    pub ipcw_clip: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Oracle sidecar; defaults to `<out>.oracle.json`.
    #[arg(long)]
    pub oracle_out: Option<PathBuf>,
    /// Also split off a test file drawn from the same generator; `--out`
    /// then receives only the training rows.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// Fraction of rows written to `--test-out`.
    #[arg(long, requires = "test_out")]
    pub test_fraction: Option<f64>,
    #[command(flatten)]
    pub synth: SynthOpts,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value_t = Estimator::SurvivalBoost)]
    pub estimator: Estimator,
    /// Per-round training log CSV; defaults to `<model>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Random search over this many configurations drawn from the tuning
    /// ranges (learning rate, rounds, depth, horizons per row), scored by
    /// IBS on a held-out fifth of the data; the best is refitted on all rows.
    #[arg(long)]
    pub search: Option<usize>,
    /// Existing directory for the fitted step functions as `time,value` CSVs.
    #[arg(long)]
    pub curves_dir: Option<PathBuf>,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub boost: BoostOpts,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV with the model's feature columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV: row, horizon, survival, cif_1..cif_K.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',', conflicts_with = "grid_size")]
    pub grid: Option<Vec<f64>>,
    /// Evenly spaced horizons up to the training maximum time.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Clamp CIFs to be nondecreasing along the grid.
    #[arg(long)]
    pub monotone: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalOpts {
    /// Points in the IBS grid.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Comma-separated event-time quantiles for accuracy and C-index.
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Option<Vec<f64>>,
    /// Intervals for S_Cen-log-simple.
    #[arg(long)]
    pub b: Option<usize>,
    /// Also report the truncated C-index per event and horizon.
    #[arg(long)]
    pub c_index: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file; repeat to compare several.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Labelled test CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Directory for report files.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Oracle sidecar from `synth`; its censoring survival replaces the
    /// Kaplan-Meier weights.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub eval: EvalOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    #[value(alias = "sb")]
    SurvivalBoost,
    #[value(alias = "aj")]
    AalenJohansen,
    #[value(alias = "km")]
    KaplanMeier,
    /// True curves; synthetic data only.
    Oracle,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Labelled CSV; without it a synthetic dataset is generated.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated models.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub models: Option<Vec<ModelChoice>>,
    /// Fraction of rows held out for scoring.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Directory for `benchmark.csv`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub schema: SchemaArgs,
    #[command(flatten)]
    pub synth: SynthOpts,
    #[command(flatten)]
    pub boost: BoostOpts,
    #[command(flatten)]
    pub eval: EvalOpts,
}
