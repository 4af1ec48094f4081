mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Scatter(a) => commands::scatter(a),
        Command::Probe(a) => commands::probe(a),
        Command::Synth(a) => commands::synth(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::FreqBaseline(a) => commands::freq_baseline(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(m) if m.errors.is_empty() => ExitCode::SUCCESS,
        Ok(m) => {
            eprintln!("{} component error(s):", m.errors.len());
            for e in &m.errors {
                eprintln!("  {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
