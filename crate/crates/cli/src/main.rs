mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HOLONOMY_LAB_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Check(a) => commands::check(&cli.common, a),
        Command::Evolve(a) => commands::evolve_cmd(&cli.common, a),
        Command::Lift(a) => commands::lift(&cli.common, a),
        Command::Synthesize(a) => commands::synthesize_cmd(&cli.common, a),
        Command::QubitDemo(a) => commands::qubit_demo(&cli.common, a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
