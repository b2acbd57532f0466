//! Binary entry point: parse the command line, dispatch, and translate
//! failures into the exit-code contract (0 success, 2 configuration error,
//! 3 internal assertion failure).

mod args;
mod commands;

use clap::Parser;

use crate::args::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version print to stdout and exit 0; genuine usage
            // errors are configuration failures.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = commands::dispatch(cli) {
        eprintln!("error: {}", err.message());
        std::process::exit(err.code());
    }
}
