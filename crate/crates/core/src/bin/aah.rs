use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aah_core::cli::run_scenario;

#[derive(Parser)]
#[command(name = "aah", version, about = "Bound states and memory dynamics of a modulated chain in a bosonic bath")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its artifacts to the scenario's out_dir.
    Run {
        config: PathBuf,
        /// Replace a scenario entry, e.g. `--set phi=-pi`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Suppress the summary on stdout.
        #[arg(short, long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.command {
        Command::Run { config, overrides, quiet } => match run_scenario(&config, &overrides) {
            Ok(out) => {
                if !quiet {
                    print!("{}", out.summary);
                    println!("wrote {} file(s) to {}", out.artifacts.len() + 2, out.scenario.out_dir.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("aah: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
