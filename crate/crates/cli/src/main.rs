mod args;
mod commands;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Run;
use manifest::{unix_now, RunManifest};

fn config_of(command: &Command) -> serde_json::Value {
    let value = match command {
        Command::Solve(a) => serde_json::to_value(a),
        Command::Tauopt(a) => serde_json::to_value(a),
        Command::Generate(a) => serde_json::to_value(a),
        Command::Train(a) => serde_json::to_value(a),
        Command::Predict(a) => serde_json::to_value(a),
        Command::Evaluate(a) => serde_json::to_value(a),
    };
    value.unwrap_or(serde_json::Value::Null)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let name = cli.command.name();
    let mut run = Run {
        out: cli.out.clone(),
        manifest: RunManifest::start(name, config_of(&cli.command)),
    };
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(&mut run, a),
        Command::Tauopt(a) => commands::tauopt(&mut run, a),
        Command::Generate(a) => commands::generate(&mut run, a),
        Command::Train(a) => commands::train(&mut run, a),
        Command::Predict(a) => commands::predict(&mut run, a),
        Command::Evaluate(a) => commands::evaluate(&mut run, a),
    };
    run.manifest.finished_unix = Some(unix_now());
    let code = match &result {
        Ok(()) => {
            run.manifest.status = "ok".into();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            run.manifest.status = "error".into();
            run.manifest.error = Some(e.to_string());
            e.exit_code()
        }
    };
    if let Err(e) = run.manifest.write(&run.out) {
        eprintln!("error: could not write run manifest: {e}");
    }
    code
}
