use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use jetcalc_cli::{corpus, run_text, CliError, Options, Report};

#[derive(Parser)]
#[command(name = "jetcalc", version, about = "Symmetries, conservation laws, Hamiltonian structures and coverings of PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunFlags {
    /// Emit the machine-readable JSON report.
    #[arg(long)]
    json: bool,
    /// Prolongation limit for rewriting on the equation.
    #[arg(long, value_name = "N")]
    max_prolong: Option<usize>,
    /// Add wall-clock timings to the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a problem file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a bundled problem file, or print it with --emit.
    Corpus {
        name: String,
        #[arg(long)]
        emit: bool,
        #[command(flatten)]
        flags: RunFlags,
    },
}

fn execute(text: &str, flags: &RunFlags) -> Result<Report, CliError> {
    let opts = Options {
        max_prolong: flags.max_prolong,
        timing: flags.timing,
    };
    run_text(text, &opts)
}

fn finish(report: Result<Report, CliError>, json: bool) -> ExitCode {
    match report {
        Ok(r) => {
            if json {
                println!("{}", r.to_json());
            } else {
                print!("{}", r.to_human());
            }
            ExitCode::from(r.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Run { file, flags } => {
            let text = std::fs::read_to_string(&file).map_err(|source| CliError::Io {
                path: file.display().to_string(),
                source,
            });
            finish(text.and_then(|t| execute(&t, &flags)), flags.json)
        }
        Command::Corpus { name, emit, flags } => match corpus::corpus(&name) {
            Ok(text) if emit => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Ok(text) => finish(execute(text, &flags), flags.json),
            Err(e) => finish(Err(e), false),
        },
    }
}
