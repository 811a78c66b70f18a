//! Binary entry point: parse arguments, run the selected command, map
//! errors to exit code 1.

use clap::Parser;

fn main() {
    let cli = ccdecomp_cli::Cli::parse();
    match ccdecomp_cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
