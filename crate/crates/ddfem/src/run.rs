//! Runs a configured experiment and writes its CSV files.

use std::path::PathBuf;

use ddfem_core::exact::LinearManufactured;

use crate::config::{Experiment, ExperimentConfig};
use crate::drivers::{self, DriverError, Study, COOK_DIAGONAL, MU};
use crate::output;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Files written and per-level failure messages.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

fn study_failures(study: &Study) -> Vec<String> {
    study
        .rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("level {}: {f}", r.level)))
        .collect()
}

pub fn run(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let name = match config.experiment {
        Experiment::Inflation => "inflation",
        Experiment::Cook => "cook",
        Experiment::Stretch => "stretch",
        Experiment::Linearised => "linearised",
    };
    let stem = format!("{name}_k{}", config.pair.order());
    let main_file = config.out.join(format!("{stem}.csv"));
    let mut summary = RunSummary::default();
    let study = match config.experiment {
        Experiment::Inflation => Some(drivers::run_inflation(
            &config.levels,
            config.pair,
            config.load,
            config.constraint,
            config.correction,
        )?),
        Experiment::Linearised => {
            let exact = LinearManufactured::smooth(MU);
            Some(drivers::run_linearised(
                &config.levels,
                config.pair,
                &exact,
                config.correction,
            )?)
        }
        Experiment::Cook => {
            let rows = drivers::run_cook(
                &config.levels,
                config.pair,
                config.load,
                config.constraint,
                config.correction,
                COOK_DIAGONAL,
            );
            output::write_file(&main_file, |f| output::write_cook(f, &rows))?;
            summary.failures = rows
                .iter()
                .filter_map(|r| r.failure.as_ref().map(|f| format!("n = {}: {f}", r.n)))
                .collect();
            None
        }
        Experiment::Stretch => {
            let rows = drivers::run_stretch(&config.meshes, config.pair, config.load, config.constraint);
            output::write_file(&main_file, |f| output::write_stretch(f, &rows))?;
            summary.failures = rows
                .iter()
                .filter_map(|r| r.failure.as_ref().map(|f| format!("{}: {f}", r.mesh)))
                .collect();
            None
        }
    };
    summary.files.push(main_file.clone());
    if let Some(study) = study {
        output::write_file(&main_file, |f| output::write_study(f, &study))?;
        let slopes = config.out.join(format!("{stem}_slopes.csv"));
        output::write_file(&slopes, |f| output::write_slopes(f, &study))?;
        summary.files.push(slopes);
        summary.failures = study_failures(&study);
    }
    Ok(summary)
}
