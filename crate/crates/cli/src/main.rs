use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = flowgate_cli::Cli::parse();
    match flowgate_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("flowgate: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
