mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use layerbench::Error;

#[derive(Debug, Parser)]
#[command(name = "bench", version, about = "Layered evaluation of program repair agents")]
pub struct Cli {
    /// TOML file whose keys mirror these flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// live, record or replay.
    #[arg(long, global = true)]
    pub llm_mode: Option<String>,
    /// Transcript directory; defaults to `<corpus>/transcripts`.
    #[arg(long, global = true)]
    pub transcripts: Option<PathBuf>,
    /// Wall-clock limit for each build or test command.
    #[arg(long, global = true)]
    pub timeout_s: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that every fix passes and every bug fails.
    Lint {
        #[arg(value_name = "CORPUS")]
        path: Option<PathBuf>,
    },
    /// Generate variants for one layer.
    Gen {
        #[command(subcommand)]
        layer: GenCommand,
    },
    /// Evaluate an adapter on the requested layers.
    Run(RunArgs),
    /// Write report files for finished runs.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    Apply(ApplyArgs),
    Understand(UnderstandArgs),
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    /// hash, rephrase or comments.
    #[arg(long)]
    pub scheme: Option<String>,
    /// vars, funcs or both.
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long)]
    pub stamp: Option<u64>,
    /// add_textual, remove_all or add_code_comments.
    #[arg(long)]
    pub comment_mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct UnderstandArgs {
    /// root_cause or behavior.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub max_refine_iters: Option<u32>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Code-search export, one JSON record per line.
    #[arg(long)]
    pub search: Option<PathBuf>,
    /// Directory holding `mirrors/<repo>/`.
    #[arg(long)]
    pub workspace: Option<PathBuf>,
    #[arg(long)]
    pub max_refine_iters: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Layers to evaluate, comma separated, or `all`.
    #[arg(long, value_delimiter = ',')]
    pub layer: Vec<String>,
    /// `[adapters.<name>]` section, or oracle, never, buggy.
    #[arg(long)]
    pub adapter: Option<String>,
    #[arg(long)]
    pub run_id: Option<String>,
    /// Stop after this many units; rerun to resume.
    #[arg(long)]
    pub max_units: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_delimiter = ',')]
    pub run: Vec<String>,
    /// Directory holding the runs; defaults to `<corpus>/runs`.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// markdown, csv, json; all three by default.
    #[arg(long, value_delimiter = ',')]
    pub format: Vec<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::RunNotFound(_) | Error::Config(_) | Error::UnknownStrategy { .. } | Error::MissingManifest(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().lines().map(str::trim).collect::<Vec<_>>().join(" | ");
            eprintln!("{}: {message}", e.code());
            ExitCode::from(exit_code(&e))
        }
    }
}
