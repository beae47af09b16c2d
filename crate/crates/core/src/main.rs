use std::process::ExitCode;

use clap::Parser;
use expface::cli::{exit_code, parse_config, run, Cli, EXIT_IO, OUTPUT_DIR_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = cli.command.split();

    let text = match &flags.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return ExitCode::from(EXIT_IO as u8);
            }
        },
        None => String::new(),
    };
    let env_dir = std::env::var(OUTPUT_DIR_ENV).ok();

    let result = parse_config(command, &text, &flags.overrides(), env_dir.as_deref())
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(artifacts) => {
            for a in artifacts {
                println!("{}", a.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
