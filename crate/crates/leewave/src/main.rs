use std::process::exit;

use clap::Parser;
use leewave::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => {}
        Ok(false) => exit(1),
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code());
        }
    }
}
