use std::io;
use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = secagg::Cli::parse();
    match secagg::run(&cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("secagg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
