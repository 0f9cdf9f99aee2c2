mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AnalyzeArgs, BenchArgs, CorrelateArgs, FixtureArgs, SignalArgs, TimecourseArgs};

/// Information-structure measures for embedding archives and signal
/// languages, plus the Gaussian estimator benchmark.
#[derive(Debug, Parser)]
#[command(name = "infostruct", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Structure measures of one archive (or one archive per layer).
    Analyze(AnalyzeArgs),
    /// Analyze every checkpoint archive matching a glob.
    Timecourse(TimecourseArgs),
    /// Gaussian differential-entropy benchmark sweep.
    Bench(BenchArgs),
    /// Synonymy, homonymy, word-order freedom, entanglement and topographic
    /// similarity of a meaning/signal language.
    Signal(SignalArgs),
    /// Spearman correlation between a report metric and external scores.
    Correlate(CorrelateArgs),
    /// Write the planted-cluster demo archive.
    #[command(hide = true)]
    Fixture(FixtureArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            eprintln!("E: usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Timecourse(a) => commands::timecourse(a),
        Command::Bench(a) => commands::bench(a),
        Command::Signal(a) => commands::signal(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Fixture(a) => commands::fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("E: {line}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
