//! Command-line front-end: subcommands, configuration and exit codes.

pub mod commands;
pub mod config;

use std::io::Write;

use clap::{Parser, Subcommand};

pub use config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "socatt", version, about = "Sentiment classification with social attention over basis CNNs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train first-order network embeddings for the authors of an edge list.
    EmbedNetwork(Flags),
    /// Pretrain and jointly train a model; write a checkpoint and history.
    Train(Flags),
    /// Score a checkpoint or predictions file; optionally compare two systems.
    Eval(Flags),
    /// Lexicon-classifier homophily pilot against rewired graphs.
    Homophily(Flags),
    /// Rank lexicon words by how specific they are to each basis model.
    AnalyzeWords(Flags),
    /// Write a synthetic planted-community benchmark.
    Synth(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EmbedNetwork(_) => "embed-network",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Homophily(_) => "homophily",
            Command::AnalyzeWords(_) => "analyze-words",
            Command::Synth(_) => "synth",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::EmbedNetwork(f)
            | Command::Train(f)
            | Command::Eval(f)
            | Command::Homophily(f)
            | Command::AnalyzeWords(f)
            | Command::Synth(f) => f,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or input paths (exit code 2).
    Usage(String),
    /// Anything that failed while running (exit code 1).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<socatt_core::Error> for CliError {
    fn from(e: socatt_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

/// Resolve and validate the configuration, then run the subcommand, writing
/// its report to `out`.
pub fn run(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = command.flags().resolve()?;
    let errs = cfg.validate(command.name());
    if !errs.is_empty() {
        return Err(CliError::Usage(format!(
            "invalid configuration for {}:\n  {}",
            command.name(),
            errs.join("\n  ")
        )));
    }
    match command {
        Command::EmbedNetwork(_) => commands::embed_network(&cfg, out),
        Command::Train(_) => commands::train(&cfg, out),
        Command::Eval(_) => commands::eval(&cfg, out),
        Command::Homophily(_) => commands::homophily(&cfg, out),
        Command::AnalyzeWords(_) => commands::analyze_words(&cfg, out),
        Command::Synth(_) => commands::synth(&cfg, out),
    }
}
