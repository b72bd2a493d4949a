mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::config::CONFIG_ENV;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid configuration (exit 1).
    #[error("{0}")]
    Usage(String),
    /// Faulty input data in strict mode (exit 2).
    #[error("{0}")]
    Data(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
        }
    }
}

/// Corpus preprocessing for Czech-Ukrainian MT.
///
/// Every subcommand reads UTF-8 lines from --input (default stdin) and
/// writes to --output (default stdout) in input order. Logs go to stderr.
#[derive(Debug, Parser)]
#[command(name = "ukcs", version, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// TOML pipeline configuration
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long, short = 'i', global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads; output order never depends on it
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write a JSON statistics document (counts plus resolved config)
    #[arg(long, global = true)]
    pub stats_out: Option<PathBuf>,
    /// Abort with exit code 2 on the first faulty record (default)
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Count faulty records and pass them through unchanged
    #[arg(long, global = true)]
    pub lenient: bool,
    /// With --lenient, drop faulty records instead of passing them through
    #[arg(long, global = true, requires = "lenient")]
    pub drop_faulty: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Ukrainian Cyrillic to Czech-style Latin (reversible)
    Romanize(TableArgs),
    /// Inverse of `romanize`
    Deromanize(TableArgs),
    /// Count casing variants and write an InCa vocabulary
    IncaTrain(IncaTrainArgs),
    /// Lowercase text and insert casing tags
    IncaEncode(VocabArgs),
    /// Restore casing from tags and the vocabulary
    IncaDecode(VocabArgs),
    /// Seeded casing/punctuation noise
    Noise(NoiseArgs),
    /// Filter a `src<TAB>tgt` bitext
    FilterParallel(FilterArgs),
    /// Length and printability filter for monolingual text
    FilterMono(MonoArgs),
    /// Train a character n-gram language model
    LangidTrain(LangidTrainArgs),
    /// Label lines with their language, or keep one language
    Langid(LangidArgs),
    /// Dual cross-entropy selection of scored pairs
    DceSelect(DceArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    /// Override table, `<cyrillic-char><TAB><latin-string>` per line
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IncaTrainArgs {
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Free-form description stored in the vocabulary header
    #[arg(long)]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VocabArgs {
    #[arg(long)]
    pub vocab: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NoiseArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub p_drop_initial_cap: Option<f64>,
    #[arg(long)]
    pub p_lowercase_all: Option<f64>,
    #[arg(long)]
    pub p_uppercase_span: Option<f64>,
    #[arg(long)]
    pub p_drop_final_punct: Option<f64>,
    #[arg(long)]
    pub p_add_punct: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FilterArgs {
    /// Corpus name; exempt corpora (XLEnt by default) skip langid and ratio
    #[arg(long, default_value = "")]
    pub corpus_tag: String,
    #[arg(long)]
    pub langid_model: Option<PathBuf>,
    /// TOML rule file replacing the built-in rules
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// `cs_term<TAB>uk_term[<TAB>forms]` file replacing the built-in lexicon
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub no_langid: bool,
    #[arg(long)]
    pub no_length_ratio: bool,
    #[arg(long)]
    pub no_rules: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LangArg {
    Cs,
    Uk,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MonoArgs {
    #[arg(long, value_enum)]
    pub lang: LangArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LangidTrainArgs {
    /// `LANG=FILE`, repeatable
    #[arg(long = "lang", required = true)]
    pub langs: Vec<String>,
    /// n-grams kept per language
    #[arg(long, short = 'k')]
    pub profile_size: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LangidArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output only lines detected as this language
    #[arg(long)]
    pub keep: Option<String>,
    /// Minimum confidence for --keep (default: filter.langid_threshold)
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DceArgs {
    /// `id<TAB>fwd_xent<TAB>bwd_xent` per line (default: --input)
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, conflicts_with = "top_n", requires = "authentic_count")]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub authentic_count: Option<u64>,
    #[arg(long)]
    pub top_n: Option<usize>,
    /// Emit the selected lines of this file (joined by line index) instead of ids
    #[arg(long)]
    pub bitext: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
