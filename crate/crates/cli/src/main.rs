//! `tenor` — batch sentiment analytics over a corpus of scientific abstracts.
//!
//! The pipeline runs as separate commands with file handoffs through the
//! output directory, so an expensive scoring run happens once while the
//! analytics iterate: `ingest` -> `score` -> `analyze` / `explain` /
//! `validate`. Summaries go to stdout as JSON; logs go to stderr.

mod commands;
mod config;

use std::io::Write as _;
use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use config::{PipelineConfig, TrendRange};

#[derive(Debug, Parser)]
#[command(name = "tenor", version, about = "Sentiment analytics for abstract corpora")]
struct Cli {
    /// TOML configuration file; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for all pipeline outputs
    #[arg(long, global = true, value_name = "PATH")]
    output_dir: Option<PathBuf>,

    /// Worker threads for scoring
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    jobs: usize,

    /// Seed for sampling and attribution
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Exit with an error when any record fails instead of reporting it
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum QuantityArg {
    /// Expected-star score mapped onto [0, 1]
    NormalizedScore,
    /// Probability of the predicted label
    ProbabilityOfLabel,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load, validate, normalize and deduplicate the raw corpus
    Ingest {
        /// Raw corpus CSV; overrides `input_csv` from the config
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Score the cleaned corpus on the 1-5 star scale
    Score {
        /// Backend spec, e.g. `lexicon:words.tsv` or `transformer:<model>`
        #[arg(long, value_name = "SPEC")]
        backend: Option<String>,
        /// Cleaned corpus to score; defaults to the ingest output
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Aggregate scores into histogram, yearly trend and journal views
    Analyze {
        /// First year of the trend view
        #[arg(long, value_name = "YEAR")]
        year_from: Option<i32>,
        /// Last year of the trend view
        #[arg(long, value_name = "YEAR")]
        year_to: Option<i32>,
        /// Number of journals to keep in the ranking
        #[arg(long, value_name = "N")]
        top_n: Option<usize>,
        /// Number of histogram bins
        #[arg(long, value_name = "N")]
        bins: Option<usize>,
    },
    /// Explain one record's prediction with word-level attributions
    #[command(group(ArgGroup::new("method").required(true).args(["exact", "samples"])))]
    Explain {
        /// Record id within the cleaned corpus
        record_id: u64,
        /// Enumerate all coalitions exactly (at most 12 words)
        #[arg(long)]
        exact: bool,
        /// Estimate from N sampled permutations
        #[arg(long, value_name = "N")]
        samples: Option<u64>,
        /// Model output to explain
        #[arg(long, value_enum, default_value_t = QuantityArg::NormalizedScore)]
        quantity: QuantityArg,
    },
    /// Cross-check labels against the external LLM on a seeded sample
    Validate {
        /// Number of records to sample
        #[arg(long, value_name = "N")]
        sample_size: usize,
    },
}

/// A command failure with its process exit code: 1 for runtime and data
/// failures, 2 for usage and configuration errors.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Runtime(String),
}

impl CmdError {
    fn exit_code(&self) -> i32 {
        match self {
            CmdError::Usage(_) => 2,
            CmdError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CmdError::Usage(m) | CmdError::Runtime(m) => m,
        }
    }
}

pub type CmdResult = Result<serde_json::Value, CmdError>;

/// Effective settings after merging the config file and flags.
pub struct Context {
    pub config: PipelineConfig,
    pub jobs: usize,
    pub strict: bool,
}

fn build_context(cli: &Cli) -> Result<Context, CmdError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| CmdError::Usage(e.to_string()))?,
        None => PipelineConfig::default(),
    };
    if let Some(dir) = &cli.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.jobs == 0 {
        return Err(CmdError::Usage("--jobs must be at least 1".into()));
    }
    Ok(Context {
        config,
        jobs: cli.jobs,
        strict: cli.strict,
    })
}

fn run(cli: &Cli) -> CmdResult {
    let mut ctx = build_context(cli)?;
    match &cli.command {
        Command::Ingest { input } => {
            if let Some(path) = input {
                ctx.config.input_csv = Some(path.clone());
            }
            commands::ingest::run(&ctx)
        }
        Command::Score { backend, input } => {
            if let Some(spec) = backend {
                ctx.config.backend = Some(spec.clone());
            }
            commands::score::run(&ctx, input.as_deref())
        }
        Command::Analyze {
            year_from,
            year_to,
            top_n,
            bins,
        } => {
            match (year_from, year_to) {
                (Some(from), Some(to)) => {
                    ctx.config.trend = Some(TrendRange {
                        year_from: *from,
                        year_to: *to,
                    });
                }
                (None, None) => {}
                _ => {
                    return Err(CmdError::Usage(
                        "--year-from and --year-to must be given together".into(),
                    ))
                }
            }
            if let Some(n) = top_n {
                ctx.config.top_n_journals = *n;
            }
            if let Some(n) = bins {
                ctx.config.histogram_bins = *n;
            }
            commands::analyze::run(&ctx)
        }
        Command::Explain {
            record_id,
            exact,
            samples,
            quantity,
        } => {
            let quantity = match quantity {
                QuantityArg::NormalizedScore => tenor::explain::ExplainedQuantity::NormalizedScore,
                QuantityArg::ProbabilityOfLabel => {
                    tenor::explain::ExplainedQuantity::ProbabilityOfLabel
                }
            };
            commands::explain::run(&ctx, *record_id, *exact, *samples, quantity)
        }
        Command::Validate { sample_size } => commands::validate::run(&ctx, *sample_size),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            let mut stdout = std::io::stdout().lock();
            let _ = writeln!(stdout, "{summary}");
        }
        Err(e) => {
            log::error!("{}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
