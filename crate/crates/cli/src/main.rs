//! `authlink`: ingest, index, train, predict and evaluate from the command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when the input data
//! is unusable.

mod commands;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "authlink", version, about = "Author name disambiguation with per-variate classifiers")]
struct Cli {
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert a DBLP XML dump into line-delimited JSON records.
    Ingest {
        /// DBLP XML file.
        xml: PathBuf,
        /// Output records file.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Print corpus counts, and block statistics for one variate.
    Stats {
        /// Records file.
        records: PathBuf,
        /// Atomic name variate whose block statistics to print, e.g. "Y Wang".
        #[arg(long)]
        anv: Option<String>,
    },
    /// Build the name index used for blocking and direct links.
    Index {
        /// Records file.
        records: PathBuf,
        /// Output index file.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train one classifier per selected block.
    Train(TrainArgs),
    /// Resolve one author occurrence on a record.
    Predict(PredictArgs),
    /// Score a trained block model on its test split.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic corpus from a spec file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct EmbeddingArgs {
    /// Title/venue embedding stores; all must share one dimension.
    #[arg(long = "embeddings", num_args = 1.., required = true)]
    stores: Vec<PathBuf>,
    /// Name embedding store; defaults to the built-in character n-gram embedder.
    #[arg(long)]
    name_embeddings: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("blocks").required(true).args(["anv", "top_n"]))]
struct TrainArgs {
    /// Records file.
    records: PathBuf,
    /// Name index built by `index`.
    index: PathBuf,
    /// Train the block of this atomic name variate.
    #[arg(long)]
    anv: Option<String>,
    /// Train the K blocks with the most authors.
    #[arg(long, value_name = "K")]
    top_n: Option<usize>,
    /// Blocks trained at the same time with --top-n.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Training configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for splits, initialisation and shuffling; overrides the config file.
    #[arg(long)]
    seed: u64,
    /// Model directory; each block is written to its own subdirectory.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// A model file, or a model directory written by `train`.
    model: PathBuf,
    /// Name index built by `index`.
    index: PathBuf,
    /// The record as one JSON line.
    #[arg(long)]
    record: String,
    /// Author name on the record to resolve.
    #[arg(long)]
    target: String,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    All,
    Anv,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Model file of one block.
    model: PathBuf,
    /// Records file.
    records: PathBuf,
    /// Split file written by `train`.
    split: PathBuf,
    /// Name forms to test: as given plus variate, or variate only.
    #[arg(long, value_enum, default_value_t = ModeArg::All)]
    mode: ModeArg,
    #[command(flatten)]
    embeddings: EmbeddingArgs,
    /// Print tab-separated metric lines instead of a table.
    #[arg(long)]
    machine: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Spec file (`key = value` lines).
    spec: PathBuf,
    /// Output records file.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write `record_id<TAB>author_key` ground truth here.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Also write a title/venue embedding store for the corpus here.
    #[arg(long)]
    embeddings_out: Option<PathBuf>,
    /// Dimension of the store written by --embeddings-out.
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Overrides the seed in the spec file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

/// Wraps any error as a data error with some context.
pub fn data<E: fmt::Display>(context: impl fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("no such file: {}", path.display())))
    }
}

fn require_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(CliError::Usage(format!("output directory does not exist: {}", p.display())))
        }
        _ => Ok(()),
    }
}

fn validate(command: &Command) -> Result<(), CliError> {
    let stores = |e: &EmbeddingArgs| -> Result<(), CliError> {
        e.stores.iter().chain(&e.name_embeddings).try_for_each(|p| require_file(p))
    };
    match command {
        Command::Ingest { xml, output } => {
            require_file(xml)?;
            require_parent(output)
        }
        Command::Stats { records, .. } => require_file(records),
        Command::Index { records, output } => {
            require_file(records)?;
            require_parent(output)
        }
        Command::Train(a) => {
            require_file(&a.records)?;
            require_file(&a.index)?;
            stores(&a.embeddings)?;
            if let Some(c) = &a.config {
                require_file(c)?;
            }
            if a.workers == 0 {
                return Err(CliError::Usage("--workers must be at least 1".into()));
            }
            if a.top_n == Some(0) {
                return Err(CliError::Usage("--top-n must be at least 1".into()));
            }
            Ok(())
        }
        Command::Predict(a) => {
            if !a.model.exists() {
                return Err(CliError::Usage(format!("no such model: {}", a.model.display())));
            }
            require_file(&a.index)?;
            stores(&a.embeddings)
        }
        Command::Evaluate(a) => {
            require_file(&a.model)?;
            require_file(&a.records)?;
            require_file(&a.split)?;
            stores(&a.embeddings)
        }
        Command::Synth(a) => {
            require_file(&a.spec)?;
            require_parent(&a.output)?;
            a.truth.iter().chain(&a.embeddings_out).try_for_each(|p| require_parent(p))?;
            if a.dim == 0 {
                return Err(CliError::Usage("--dim must be positive".into()));
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    validate(&cli.command)?;
    match cli.command {
        Command::Ingest { xml, output } => commands::ingest(&xml, &output),
        Command::Stats { records, anv } => commands::stats(&records, anv.as_deref()),
        Command::Index { records, output } => commands::index(&records, &output),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(1),
                CliError::Data(_) => ExitCode::from(2),
            }
        }
    }
}
