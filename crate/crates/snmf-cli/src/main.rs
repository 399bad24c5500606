//! `snmf` binary: exit code 0 on success, 1 on usage errors, 2 on data
//! errors.

mod args;
mod commands;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = match &cli.command {
        Command::Factorize(a) => commands::factorize(a),
        Command::Bisparse(a) => commands::bisparse_cmd(a),
        Command::Project(a) => commands::project(a),
        Command::Measure(a) => commands::measure(a),
        Command::BenchProjection(a) => commands::bench_projection(a),
        Command::Synth(a) => commands::synth(a),
        Command::Render(a) => commands::render(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
