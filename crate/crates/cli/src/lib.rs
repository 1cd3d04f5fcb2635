//! `turnkit` command-line front end.
//!
//! Exit codes: 0 success, 1 fatal error, 2 partial success (`parse
//! --keep-going` with some inputs skipped).

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "turnkit", version, about = "Conversational corpus curation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Run configuration (TOML); flags override its values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print a machine-readable summary on stdout
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse transcripts (EAF, CHAT, TextGrid, EXB) into one turn table
    Parse(ParseArgs),
    /// Write the assessment report and figures for a turn table
    Assess(AssessArgs),
    /// Find continuer and repair-initiator candidates
    Mine(MineArgs),
    /// Compare two turn tables
    Compare(CompareArgs),
    /// List the tiers of transcript files
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Transcript files or directories
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Tier selection and role file (TOML)
    #[arg(long)]
    pub tier_map: Option<PathBuf>,
    /// Skip unreadable inputs instead of failing
    #[arg(long)]
    pub keep_going: bool,
    /// Files parsed in parallel
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub corpus_id: Option<String>,
    #[arg(long)]
    pub language: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    pub table: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub media_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of sampled dyadic stretches
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    pub table: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Near-copy threshold on normalised edit distance
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Minimum occurrences of a recurrent format
    #[arg(long)]
    pub min_count: Option<usize>,
    /// Maximum occurrences of a near-unique flank
    #[arg(long)]
    pub unique_max: Option<usize>,
    #[arg(long)]
    pub top: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub table_a: PathBuf,
    pub table_b: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Duration histogram bin width (ms)
    #[arg(long)]
    pub bin: Option<i64>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Parse(a) => commands::parse(a),
        Command::Assess(a) => commands::assess(a),
        Command::Mine(a) => commands::mine(a),
        Command::Compare(a) => commands::compare(a),
        Command::Inspect(a) => commands::inspect(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}
