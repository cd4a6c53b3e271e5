//! Command line and key-value configuration of a benchmark run.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use ddfem_core::assembly::Pair;
use ddfem_core::materials::Constraint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Inflation,
    Cook,
    Stretch,
    Linearised,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstraintArg {
    C1,
    C2,
}

impl From<ConstraintArg> for Constraint {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::C1 => Constraint::C1,
            ConstraintArg::C2 => Constraint::C2,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: PathBuf, line: usize },
    #[error(transparent)]
    Cli(#[from] clap::Error),
}

/// Raw command line. Either an experiment or `--config FILE` is required.
#[derive(Debug, Parser)]
#[command(
    name = "ddfem",
    about = "Mixed finite element benchmarks for incompressible neo-Hookean elasticity"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    /// Key-value file with the same keys as the long options.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Polynomial order of the pair: 1 or 2.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub f: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub levels: Vec<usize>,
    /// Mesh file; repeat for several meshes (stretch only).
    #[arg(long)]
    pub mesh: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub constraint: Option<ConstraintArg>,
    #[arg(long)]
    pub no_correction: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub pair: Pair,
    pub constraint: Constraint,
    /// λ, f or u depending on the experiment.
    pub load: f64,
    pub levels: Vec<usize>,
    pub meshes: Vec<PathBuf>,
    pub correction: bool,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn from_args<I, T>(args: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args)?;
        match &cli.config {
            Some(path) => {
                let mut file = parse_config_file(path)?;
                file.config = None;
                merge(file, cli).validate()
            }
            None => cli.validate(),
        }
    }
}

/// Reads `key = value` lines into a [`Cli`]. `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<Cli, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.into(),
        source,
    })?;
    let mut args = vec!["ddfem".to_string()];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                path: path.into(),
                line: i + 1,
            });
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match key.as_str() {
            "experiment" => args.push(value.to_string()),
            "no-correction" | "correction" => {
                let flag: bool = value
                    .parse()
                    .map_err(|_| ConfigError::Invalid(format!("{key}: expected true or false")))?;
                if flag == (key == "no-correction") {
                    args.push("--no-correction".into());
                }
            }
            _ => {
                args.push(format!("--{key}"));
                args.push(value.to_string());
            }
        }
    }
    Ok(Cli::try_parse_from(args)?)
}

/// Command line values override file values.
fn merge(file: Cli, cli: Cli) -> Cli {
    Cli {
        experiment: cli.experiment.or(file.experiment),
        config: None,
        order: cli.order.or(file.order),
        lambda: cli.lambda.or(file.lambda),
        f: cli.f.or(file.f),
        u: cli.u.or(file.u),
        levels: if cli.levels.is_empty() { file.levels } else { cli.levels },
        mesh: if cli.mesh.is_empty() { file.mesh } else { cli.mesh },
        constraint: cli.constraint.or(file.constraint),
        no_correction: cli.no_correction || file.no_correction,
        out: cli.out.or(file.out),
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl Cli {
    pub fn validate(self) -> Result<ExperimentConfig, ConfigError> {
        let experiment = self.experiment.ok_or_else(|| invalid("missing experiment"))?;
        let pair = match self.order {
            Some(1) => Pair::Low,
            Some(2) => Pair::High,
            Some(k) => return Err(invalid(format!("order must be 1 or 2, got {k}"))),
            None => return Err(invalid("missing --order")),
        };
        let (load, wrong) = match experiment {
            Experiment::Inflation => (self.lambda.unwrap_or(3.0), [self.f, self.u]),
            Experiment::Cook => (self.f.unwrap_or(0.2), [self.lambda, self.u]),
            Experiment::Stretch => (self.u.unwrap_or(1.5), [self.lambda, self.f]),
            Experiment::Linearised => (0.0, [self.lambda, self.f.or(self.u)]),
        };
        if wrong.iter().any(Option::is_some) {
            return Err(invalid("load parameter does not match the experiment"));
        }
        if !load.is_finite() || (experiment == Experiment::Inflation && load < 1.0) {
            return Err(invalid(format!("invalid load parameter {load}")));
        }
        let default_constraint = match experiment {
            Experiment::Cook => Constraint::C2,
            _ => Constraint::C1,
        };
        let levels = match (experiment, self.levels.is_empty()) {
            (Experiment::Stretch, _) => self.levels,
            (Experiment::Inflation | Experiment::Linearised, true) => match pair {
                Pair::Low => vec![4, 8, 16, 32],
                Pair::High => vec![4, 8, 16],
            },
            (Experiment::Cook, true) => vec![6, 12, 24],
            (_, false) => self.levels,
        };
        if levels.contains(&0) {
            return Err(invalid("mesh levels must be positive"));
        }
        if experiment != Experiment::Stretch && !self.mesh.is_empty() {
            return Err(invalid("--mesh applies to the stretch experiment only"));
        }
        let meshes = match experiment {
            Experiment::Stretch if self.mesh.is_empty() => crate::drivers::stretch_assets(),
            _ => self.mesh,
        };
        Ok(ExperimentConfig {
            experiment,
            pair,
            constraint: self.constraint.map_or(default_constraint, Constraint::from),
            load,
            levels,
            meshes,
            correction: !self.no_correction,
            out: self.out.ok_or_else(|| invalid("missing --out"))?,
        })
    }
}
