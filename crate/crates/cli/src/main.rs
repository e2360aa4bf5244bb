use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "lexdetect",
    version,
    about = "Lexicon-feature fake news detection pipeline"
)]
pub struct Cli {
    /// Base random seed (run i uses seed + i).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (default: number of processors). Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Experiment config file (JSON, or TOML by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Print failures as a JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowercase, rewrite URLs/mentions/hashtags/covid terms, and name emoji.
    Preprocess(PreprocessArgs),
    /// Compute the 18 linguistic features of every document.
    Extract(ExtractArgs),
    /// Train a classifier over seeded runs and write the model and report.
    Train(TrainArgs),
    /// Score a saved model on a features file or corpus.
    Eval(EvalArgs),
    /// Gain importance of a boosted model.
    Importance(ImportanceArgs),
    /// Print a decision tree as an if/else rule.
    Explain(ExplainArgs),
    /// Compare embedding-only and embedding+feature MLP heads.
    Fuse(FuseArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus with id, text, label (and optional split) columns.
    #[arg(long)]
    pub input: PathBuf,

    /// Input format; defaults to csv for .csv files and tsv otherwise.
    #[arg(long, value_parser = ["tsv", "csv"])]
    pub in_format: Option<String>,

    /// Rewrite rules JSON (url_pattern, mention_pattern, hashtag_pattern, covid_terms).
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    #[arg(long)]
    pub output: PathBuf,

    /// Output format; defaults to the input format.
    #[arg(long, value_parser = ["tsv", "csv"])]
    pub out_format: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Directory holding one <category>.txt file per lexical category.
    #[arg(long)]
    pub lexicons: PathBuf,

    /// Features CSV to write.
    #[arg(long)]
    pub output: PathBuf,

    /// Extract from the text as given, skipping preprocessing.
    #[arg(long)]
    pub raw: bool,

    /// Fit a normalizer on the training split and write it here.
    #[arg(long, value_name = "PATH")]
    pub fit_normalizer: Option<PathBuf>,

    /// Apply a saved normalizer to the written features.
    #[arg(long, value_name = "PATH", conflicts_with = "fit_normalizer")]
    pub normalize: Option<PathBuf>,

    /// Seed of the 60/20/20 split when the corpus has no split column.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Unnormalized features CSV written by `extract`.
    #[arg(long)]
    pub features: PathBuf,

    /// svm, tree, forest, gbdt or mlp.
    #[arg(long)]
    pub model: Option<String>,

    /// Model JSON to write (the run with the base seed).
    #[arg(long)]
    pub output: PathBuf,

    /// Report text to write; CSV and JSON siblings are written alongside.
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[arg(long)]
    pub runs: Option<usize>,

    /// Grids file mapping model name to hyperparameter grids.
    #[arg(long)]
    pub grid: Option<PathBuf>,

    /// Hyperparameter overrides as a JSON object.
    #[arg(long)]
    pub params: Option<String>,

    /// Comma-separated feature names to train on.
    #[arg(long, value_delimiter = ',')]
    pub feature_subset: Option<Vec<String>>,

    /// Shorthand for the max_depth hyperparameter.
    #[arg(long)]
    pub max_depth: Option<usize>,

    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Unnormalized features CSV.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub features: Option<PathBuf>,

    /// Corpus to preprocess and featurize (needs --lexicons).
    #[arg(long, requires = "lexicons")]
    pub input: Option<PathBuf>,

    #[arg(long)]
    pub lexicons: Option<PathBuf>,

    #[arg(long, value_parser = ["tsv", "csv"])]
    pub in_format: Option<String>,

    #[arg(long)]
    pub rules: Option<PathBuf>,

    /// Per-document predictions CSV to write.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Importance CSV to write.
    #[arg(long)]
    pub output: PathBuf,

    /// Bar-chart data file; defaults to the output path with a .dat extension.
    #[arg(long)]
    pub chart: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,

    /// Deepest tree that will be rendered.
    #[arg(long, default_value_t = 3)]
    pub max_depth: usize,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    #[arg(long)]
    pub lexicons: PathBuf,

    /// Embedding JSONL file (manifest line, then one record per document).
    #[arg(long, conflicts_with = "toy_dim")]
    pub embeddings: Option<PathBuf>,

    /// Dimension of the built-in hashing encoder used without --embeddings.
    #[arg(long)]
    pub toy_dim: Option<usize>,

    /// Save the embeddings used to this JSONL file.
    #[arg(long)]
    pub write_embeddings: Option<PathBuf>,

    #[arg(long, default_value_t = 5)]
    pub runs: usize,

    /// Report text to write; a CSV sibling is written alongside.
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[arg(long)]
    pub max_epochs: Option<usize>,

    /// Validate every N optimizer steps.
    #[arg(long)]
    pub eval_steps: Option<usize>,

    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,

    /// Replace every feature by zero in the fused input.
    #[arg(long)]
    pub null_features: bool,

    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

fn report_error(err: &anyhow::Error, json: bool) {
    if json {
        let kind = err
            .chain()
            .find_map(|e| e.downcast_ref::<lexdetect::Error>())
            .map(|e| e.kind())
            .unwrap_or("runtime");
        let obj = serde_json::json!({
            "error": {
                "kind": kind,
                "message": format!("{err:#}"),
            }
        });
        eprintln!("{obj}");
    } else {
        eprintln!("error: {err:#}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            report_error(
                &anyhow::anyhow!("configuring {n} threads: {e}"),
                cli.json_errors,
            );
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e, cli.json_errors);
            ExitCode::from(1)
        }
    }
}
