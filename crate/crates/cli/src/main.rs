//! `sympath`: batch front end for the truncated Pauli-path engines.

mod commands;
mod fail;
mod input;
mod verify;

use clap::{Parser, Subcommand};

use fail::Failure;

#[derive(Debug, Parser)]
#[command(name = "sympath", version, about = "Truncated symmetry-adapted Pauli-path simulation")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "SYMPATH_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Truncated expectation values at one or more parameter points.
    Expect(commands::ExpectArgs),
    /// Truncated output distribution.
    Probs(commands::ProbsArgs),
    /// Bitstrings drawn by marginal sampling.
    Sample(commands::SampleArgs),
    /// RMS truncation error against the exact oracle across budgets.
    #[command(name = "sweep-l")]
    SweepL(commands::SweepArgs),
    /// Engine-vs-oracle checks on generated small circuits.
    Verify(verify::VerifyArgs),
    /// Collision-probability estimate over parameter draws.
    Anticoncentration(commands::AntiArgs),
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::validation("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| Failure::Engine(e.into()))?;
    }
    match &cli.command {
        Command::Expect(a) => commands::expect(a),
        Command::Probs(a) => commands::probs(a),
        Command::Sample(a) => commands::sample(a),
        Command::SweepL(a) => commands::sweep(a),
        Command::Verify(a) => verify::verify(a),
        Command::Anticoncentration(a) => commands::anticoncentration(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("sympath: {e}");
        std::process::exit(e.exit_code());
    }
}
