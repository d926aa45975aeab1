use std::process::ExitCode;

use clap::Parser;
use energy_growth::cli::{run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(outcome) => {
            if !outcome.summary.is_empty() {
                println!("{}", outcome.summary);
            }
            if let Some(dir) = outcome.out_dir {
                for f in &outcome.files {
                    eprintln!("wrote {}", dir.join(&f.name).display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &CliError) -> ExitCode {
    ExitCode::from(e.exit_code() as u8)
}
