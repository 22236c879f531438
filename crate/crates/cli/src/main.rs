//! `aim`: train, evaluate and inspect attention-based misinformation
//! classifiers from the command line.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod duration;
mod manifest;
mod settings;

#[derive(Debug, Parser)]
#[command(
    name = "aim",
    version,
    about = "Attention-based misinformation identification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Featurize, split and train; writes a checkpoint, history and manifest.
    Train(cmd::train::TrainArgs),
    /// Evaluate a checkpoint, optionally across detection deadlines.
    Eval(cmd::eval::EvalArgs),
    /// Dump the dynamic-attention curve and top-weighted microblogs.
    Explain(cmd::explain::ExplainArgs),
    /// Generate a synthetic dataset with planted signal posts.
    Synth(cmd::synth::SynthArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(cmd::gradcheck::GradcheckArgs),
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn check_failed(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return e.code;
        }
        if let Some(e) = cause.downcast_ref::<aim_core::AimError>() {
            return match e {
                aim_core::AimError::Io(_) => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd::train::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::Explain(a) => cmd::explain::run(a),
        Command::Synth(a) => cmd::synth::run(a),
        Command::Gradcheck(a) => cmd::gradcheck::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
