use std::process::ExitCode;

use ddfem::config::{ConfigError, ExperimentConfig};

fn main() -> ExitCode {
    let config = match ExperimentConfig::from_args(std::env::args_os()) {
        Ok(c) => c,
        Err(ConfigError::Cli(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match ddfem::run::run(&config) {
        Ok(summary) => {
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            for f in &summary.failures {
                eprintln!("failed: {f}");
            }
            if summary.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
