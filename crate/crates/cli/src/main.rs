use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cardforge::corpus::DocKind;
use cardforge::scholarly::STOPWORDS_ENV;
use cardforge_cli::{
    card_json, cmd_card, cmd_census, cmd_evaluate, cmd_features, cmd_train, parse_classifiers, parse_feature_sets,
    parse_thresholds, CardConfig, Formats, ReportFormat, RunConfig,
};

#[derive(Parser)]
#[command(name = "cardforge", version, about = "Social card metadata census and striking image prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tally metadata categories per year and card capability per platform.
    Census(Common),
    /// Dump candidate image features and the eligibility reduction.
    Features(Common),
    /// Fit one classifier on every eligible document.
    Train(Common),
    /// Evaluate baselines and the classifier x feature-set grid.
    Evaluate(Common),
    /// Build a social card for one HTML file.
    Card(CardArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    News,
    Scholarly,
}

#[derive(Args)]
struct Common {
    /// Corpus manifest file, or a directory containing manifest.jsonl.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: logical CPUs).
    #[arg(long)]
    jobs: Option<usize>,
    /// Model file written by `train`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Comma-separated feature sets, e.g. `base,base+figure_position`.
    #[arg(long, default_value = "base")]
    feature_sets: String,
    /// Comma-separated classifiers, or `all`.
    #[arg(long, default_value = "random_forest")]
    classifiers: String,
    /// Comma-separated ascending thresholds, or `default` (0 to 1 in steps of 0.05).
    #[arg(long, default_value = "default")]
    thresholds: String,
    /// Random baseline trials.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Report encoding; both when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Oversample the minority class when training.
    #[arg(long)]
    balance_classes: bool,
    #[arg(long, env = STOPWORDS_ENV)]
    stopwords: Option<PathBuf>,
}

#[derive(Args)]
struct CardArgs {
    html: PathBuf,
    /// URL the HTML was fetched from; relative references resolve against it.
    #[arg(long)]
    base_url: String,
    /// Trained model used when the metadata names no image.
    #[arg(long)]
    model: Option<PathBuf>,
    /// JSON object mapping image URLs to files relative to the HTML file.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "news")]
    kind: KindArg,
    /// Write the card here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_config(c: &Common) -> Result<RunConfig> {
    let mut config = RunConfig::new(&c.corpus, &c.out);
    config.seed = c.seed;
    config.classifiers = parse_classifiers(&c.classifiers)?;
    config.feature_sets = parse_feature_sets(&c.feature_sets)?;
    config.thresholds = parse_thresholds(&c.thresholds)?;
    config.trials = c.trials;
    config.folds = c.folds;
    config.formats = Formats(c.format.map(|f| match f {
        FormatArg::Json => ReportFormat::Json,
        FormatArg::Csv => ReportFormat::Csv,
    }));
    config.hyperparams.balance_classes = c.balance_classes;
    config.model_path = c.model.clone();
    config.stopwords_path = c.stopwords.clone();
    Ok(config)
}

fn set_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker pool")?;
    }
    Ok(())
}

type CorpusCommand = fn(&RunConfig) -> Result<Vec<PathBuf>>;

fn run(cli: Cli) -> Result<()> {
    let (common, cmd): (&Common, CorpusCommand) = match &cli.command {
        Command::Census(c) => (c, cmd_census),
        Command::Features(c) => (c, cmd_features),
        Command::Train(c) => (c, cmd_train),
        Command::Evaluate(c) => (c, cmd_evaluate),
        Command::Card(a) => {
            let config = CardConfig {
                html_path: a.html.clone(),
                base_url: a.base_url.clone(),
                model_path: a.model.clone(),
                images_path: a.images.clone(),
                doc_kind: match a.kind {
                    KindArg::News => DocKind::News,
                    KindArg::Scholarly => DocKind::Scholarly,
                },
            };
            let json = card_json(&config, &cmd_card(&config)?)?;
            match &a.out {
                Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{json}"),
            }
            return Ok(());
        }
    };
    set_jobs(common.jobs)?;
    for path in cmd(&run_config(common)?)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
