//! `causa`: command-line front end for structural causal models.

mod commands;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::failure::Failure;
use crate::output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "causa",
    version,
    about = "Actual causality, responsibility and blame in structural equation models"
)]
pub struct Cli {
    /// Emit a JSON result document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Also print rationals as decimals truncated to this many digits.
    #[arg(long, global = true, value_name = "DIGITS")]
    decimal: Option<usize>,
    /// Upper bound on worker threads.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a model for cycles, range violations and incomplete tables.
    Validate {
        model: PathBuf,
        /// Print the causal network in Graphviz DOT form.
        #[arg(long)]
        dot: bool,
    },
    /// Evaluate a causal formula such as `[ST<-0](BS=0) & BT=1`.
    Eval {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        formula: String,
    },
    /// Decide whether an event is an actual cause of a formula.
    Cause {
        #[command(flatten)]
        question: Question,
        /// List every witness instead of the first one.
        #[arg(long)]
        all: bool,
    },
    /// Degree of responsibility of an event for a formula.
    Responsibility {
        #[command(flatten)]
        question: Question,
        /// Use the model's `weights` block.
        #[arg(long)]
        weights: bool,
        /// Override one weight, e.g. `--weight ST=1/2`; implies weighting.
        #[arg(long = "weight", value_name = "NAME=P/Q")]
        weight: Vec<String>,
    },
    /// Degree of blame for an action in a scenario file.
    Blame {
        scenario: PathBuf,
        /// Apply the forbid blocks of the scenario's models.
        #[arg(long)]
        allow: bool,
        #[arg(long, value_name = "K")]
        max_changes: Option<usize>,
    },
    /// Two-level QBF utilities.
    Qbf {
        #[command(subcommand)]
        op: QbfOp,
    },
}

#[derive(Args, Debug)]
pub struct Target {
    model: PathBuf,
    /// Context name; may be omitted when the model declares exactly one.
    #[arg(long)]
    context: Option<String>,
}

#[derive(Args, Debug)]
pub struct Question {
    #[command(flatten)]
    target: Target,
    /// The candidate cause, `NAME=VALUE`.
    #[arg(long)]
    event: String,
    /// The effect, a boolean combination of events.
    #[arg(long)]
    phi: String,
    /// Apply the model's forbid blocks.
    #[arg(long)]
    allow: bool,
    /// Search contingencies with at most this many changed variables.
    #[arg(long, value_name = "K")]
    max_changes: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum QbfOp {
    /// Truth value of the formula.
    Solve { file: PathBuf },
    /// Largest number of existential variables set in a witness (-1 if none).
    Maxqsat2 {
        file: PathBuf,
        /// Count only these existential variables (comma separated).
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<String>>,
    },
    /// Smallest number of existential variables set in a witness (|A|+1 if none).
    Minqsat2 { file: PathBuf },
    /// The causal model whose responsibility encodes MINQSAT2.
    ToModel { file: PathBuf },
    /// Compare responsibility in that model with 1/(MINQSAT2+2).
    CheckTheorem { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { failure::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Some(partial) = &f.output {
                print!("{partial}");
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<String, Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let format = Format {
        json: cli.json,
        decimal: cli.decimal,
    };
    commands::dispatch(&cli.command, &format)
}
