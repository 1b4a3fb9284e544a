use std::process;

use clap::Parser;

mod cli;
mod commands;

use cli::Cli;

fn main() {
    let args = Cli::parse();
    match commands::run(args) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(e.exit_code());
        }
    }
}
