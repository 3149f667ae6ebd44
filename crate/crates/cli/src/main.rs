mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{AnalyzeArgs, BoundArgs, ConstructArgs, ReportArgs, Simulate, VerifyArgs};
use config::{parse_u64, FileConfig, Overrides, Settings};
use output::Format;

const AFTER_HELP: &str = "\
Exit status: 0 on success, 1 when a valid (unflagged) bound is violated, 2 on input errors.
Key strings are written bit 0 first. Every randomized step draws from --seed, so identical
arguments give byte-identical output regardless of --workers.";

#[derive(Parser, Debug)]
#[command(
    name = "keyleak",
    version,
    about = "Statistical-distance security calculator for generated keys",
    long_about = "Statistical-distance security calculator for generated keys.\n\n\
        Computes exactly what a key distribution gives an attacker, evaluates the security \
        bounds quoted for distance-from-uniform criteria, and checks them by brute force on \
        small key spaces.",
    after_help = AFTER_HELP
)]
struct Cli {
    /// Seed for randomized sweeps and sampling
    #[arg(long, global = true, value_parser = parse_u64)]
    seed: Option<u64>,
    /// Use exact rational arithmetic where supported (keys up to 20 bits)
    #[arg(long, global = true)]
    exact: bool,
    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// TOML file with defaults for any of these flags and `[[params]]` sets for `report`
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an extremal key distribution and emit it as distribution JSON.
    ///
    /// Families: the known-plaintext counter-example (`kpa`), distributions that meet the
    /// subset-guessing bound with equality (`saturating`), a single spike (`spiked`),
    /// independently biased bits (`biased`), `uniform` and `point`. With --exact the
    /// construction runs in rational arithmetic and the exact atoms are listed too.
    Construct(ConstructArgs),
    /// Evaluate one named bound: subset leak, known-plaintext average, Markov tail,
    /// individual guarantees, Fano BER, Pinsker band, leftover-hash length, error-correction
    /// leak, MAC bounds, and the two formulas flagged as incorrect.
    ///
    /// Run `keyleak bound --list` for names and parameters.
    Bound(BoundArgs),
    /// Hold every valid bound against brute-force oracles on seeded random and constructed
    /// distributions, and search for counter-examples to the flagged formulas.
    ///
    /// Exits 1 if any valid bound is violated. Refuting a flagged formula is the expected
    /// outcome and does not fail the run. --bound-scale below 1 tightens every valid bound,
    /// which should make the run fail.
    Verify(VerifyArgs),
    /// Run a primitive: one-time pad, Toeplitz hashing, LFSR keystreams, polynomial MACs,
    /// the leftover-hash family average, the key-processing pipeline, or the optimal
    /// distinguisher between two distributions.
    Simulate {
        #[command(subcommand)]
        what: Simulate,
    },
    /// Leak projections per model: whole-block compromise probability, security bits,
    /// expected leaks per day and mean time to a leak, plus net key rate after error
    /// correction. Parameter sets come from the config file; flags override every set.
    Report(ReportArgs),
    /// Load a distribution JSON file and emit its dossier: p1, distance from uniform,
    /// entropy, information leak, optimal BER, top of the profile, and every applicable
    /// bound with its slack.
    Analyze(AnalyzeArgs),
}

enum Failure {
    Input(anyhow::Error),
    Violation,
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(Failure::Input)?,
        None => FileConfig::default(),
    };
    let overrides =
        Overrides { seed: cli.seed, exact: cli.exact, workers: cli.workers, out: cli.out, format: cli.format };
    let mut settings = Settings::merge(overrides, file).map_err(Failure::Input)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = settings.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().context("starting worker pool").map_err(Failure::Input)?;

    let outcome = pool
        .install(|| -> Result<commands::Outcome> {
            Ok(match &cli.command {
                Command::Construct(a) => commands::construct(a, &settings)?,
                Command::Bound(a) => commands::bound(a)?,
                Command::Verify(a) => commands::verify(a, &settings)?,
                Command::Simulate { what } => commands::simulate(what, &settings)?,
                Command::Report(a) => {
                    let (o, markdown) = commands::report(a, &settings)?;
                    if markdown {
                        settings.format = Format::Markdown;
                    }
                    o
                }
                Command::Analyze(a) => commands::analyze(a, &settings)?,
            })
        })
        .map_err(Failure::Input)?;

    let text = outcome.rendered.render(settings.format).map_err(Failure::Input)?;
    match &settings.out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(Failure::Input)?
        }
        None => {
            let mut out = std::io::stdout().lock();
            // A closed pipe is not an error worth reporting.
            let _ = out.write_all(text.as_bytes());
        }
    }
    if outcome.violation {
        Err(Failure::Violation)
    } else {
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => {
            eprintln!("keyleak: a valid bound was violated");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("keyleak: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
