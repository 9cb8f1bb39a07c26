mod cli;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn,argos=info")).init();
    match cli::Cli::try_parse() {
        Ok(cli) => cli::run(cli),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let _ = e.print();
            eprintln!("\n{}", cli::Cli::command().render_usage());
            ExitCode::from(cli::EXIT_LOAD)
        }
    }
}
