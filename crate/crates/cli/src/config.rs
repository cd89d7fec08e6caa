//! Experiment configuration: command-line flags merged over an optional
//! `key = value` file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sketchproj::generate::MatrixSource;
use sketchproj::linsolve::Probabilities;

use crate::CliError;

const FLOP_MODEL: &str = "\
Flop model (dense upper bounds per iteration, q = sketch width):
  solve/project: m·n·q + n²·q (if B ≠ I) + q³
  invert row/col: 3n²q (+n²q if B ≠ I) + q³; symmetric: 6n²q (+n²q) + q³
  AdaRBFGS: 4n²q + q³; Newton-Schulz: 2n³; minimal residual: 3n³
  gossip: 3 per averaged node";

#[derive(Debug, Parser)]
#[command(name = "sketchproj", version, about = "Randomized sketch-and-project solvers and benchmarks", after_long_help = FLOP_MODEL)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    Solve,
    Project,
    Invert,
    Gossip,
    Rate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a consistent system Ax = b with a sketch-and-project method.
    Solve(Flags),
    /// Project a point onto {x : Ax = b} by stochastic dual ascent.
    Project(Flags),
    /// Approximate A^{-1}.
    Invert(Flags),
    /// Randomized gossip averaging on a graph.
    Gossip(Flags),
    /// Print the convergence-rate certificate of a method.
    Rate(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Solve(f) => (CommandKind::Solve, f),
            Command::Project(f) => (CommandKind::Project, f),
            Command::Invert(f) => (CommandKind::Invert, f),
            Command::Gossip(f) => (CommandKind::Gossip, f),
            Command::Rate(f) => (CommandKind::Rate, f),
        }
    }
}

/// Every flag is optional so that a config file can supply it.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// MatrixMarket input file (or edge-list file for `gossip`).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Generator spec, e.g. rand:100x50, sprand:100x50:0.1:0.01, spd:200,
    /// rank-deficient:300x300:40, hilbert:20; for gossip complete:N or
    /// graph:N:P (random connected graph with extra-edge probability P).
    #[arg(long)]
    pub gen: Option<String>,
    #[arg(long)]
    pub method: Option<String>,
    /// identity | a | ata
    #[arg(long)]
    pub b_weight: Option<String>,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// convenient | uniform
    #[arg(long)]
    pub probabilities: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Output CSV path; repetitions go to `<stem>.repK.csv` and the
    /// aggregate to `<stem>.aggregate.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated extra series for `project`: gap, dual, primal,
    /// residual-bound (residual and error are always written).
    #[arg(long)]
    pub track: Option<String>,
    /// File of `key = value` lines using the long flag names; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BWeight {
    Identity,
    A,
    Ata,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    File(PathBuf),
    Gen(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub method: String,
    pub input: Input,
    pub b_weight: Option<BWeight>,
    pub block_size: Option<usize>,
    pub probabilities: Probabilities,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub reps: usize,
    pub out: Option<PathBuf>,
    pub track: Vec<String>,
}

/// Parse `key = value` lines. `#` starts a comment; blank lines are skipped;
/// values may be wrapped in double quotes. Keys use the long flag names with
/// either `-` or `_`.
pub fn parse_config_str(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = match raw.find('#') {
            Some(i) if !in_quotes(raw, i) => &raw[..i],
            _ => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| CliError::Config {
            line,
            msg: "expected 'key = value'".into(),
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return Err(CliError::Config {
                line,
                msg: format!("bad key '{key}'"),
            });
        }
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        } else if value.contains('"') {
            return Err(CliError::Config {
                line,
                msg: "unbalanced quotes".into(),
            });
        }
        if out.insert(key.clone(), value.to_string()).is_some() {
            return Err(CliError::Config {
                line,
                msg: format!("duplicate key '{key}'"),
            });
        }
    }
    Ok(out)
}

fn in_quotes(s: &str, pos: usize) -> bool {
    s[..pos].matches('"').count() % 2 == 1
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("bad value '{v}' for {key}")))
}

impl Flags {
    /// Fill unset flags from config-file pairs.
    pub fn merge(mut self, pairs: &BTreeMap<String, String>) -> Result<Self, CliError> {
        for (key, v) in pairs {
            match key.as_str() {
                "matrix" => self.matrix = self.matrix.or_else(|| Some(PathBuf::from(v))),
                "gen" => self.gen = self.gen.or_else(|| Some(v.clone())),
                "method" => self.method = self.method.or_else(|| Some(v.clone())),
                "b-weight" => self.b_weight = self.b_weight.or_else(|| Some(v.clone())),
                "block-size" => self.block_size = self.block_size.or(Some(parse_value(key, v)?)),
                "probabilities" => {
                    self.probabilities = self.probabilities.or_else(|| Some(v.clone()))
                }
                "seed" => self.seed = self.seed.or(Some(parse_value(key, v)?)),
                "tol" => self.tol = self.tol.or(Some(parse_value(key, v)?)),
                "max-iters" => self.max_iters = self.max_iters.or(Some(parse_value(key, v)?)),
                "reps" => self.reps = self.reps.or(Some(parse_value(key, v)?)),
                "out" => self.out = self.out.or_else(|| Some(PathBuf::from(v))),
                "track" => self.track = self.track.or_else(|| Some(v.clone())),
                other => return Err(CliError::Usage(format!("unknown config key '{other}'"))),
            }
        }
        Ok(self)
    }

    pub fn into_config(self, command: CommandKind) -> Result<ExperimentConfig, CliError> {
        let flags = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
                self.clone().merge(&parse_config_str(&text)?)?
            }
            None => self,
        };
        let input = match (flags.matrix, flags.gen) {
            (Some(p), None) => Input::File(p),
            (None, Some(g)) => Input::Gen(g),
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "give either --matrix or --gen, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "one of --matrix or --gen is required".into(),
                ))
            }
        };
        if let (
            Input::Gen(g),
            CommandKind::Solve | CommandKind::Project | CommandKind::Invert | CommandKind::Rate,
        ) = (&input, command)
        {
            MatrixSource::parse(g)?;
        }
        let b_weight = match flags.b_weight.as_deref() {
            None => None,
            Some("identity" | "i") => Some(BWeight::Identity),
            Some("a") => Some(BWeight::A),
            Some("ata") => Some(BWeight::Ata),
            Some(other) => return Err(CliError::Usage(format!("unknown --b-weight '{other}'"))),
        };
        let probabilities = match flags.probabilities.as_deref() {
            None | Some("convenient") => Probabilities::Convenient,
            Some("uniform") => Probabilities::Uniform,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown --probabilities '{other}'"
                )))
            }
        };
        let tol = flags.tol.unwrap_or(1e-6);
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliError::Usage("--tol must lie in (0, 1)".into()));
        }
        let reps = flags.reps.unwrap_or(1);
        if reps == 0 {
            return Err(CliError::Usage("--reps must be at least 1".into()));
        }
        if flags.block_size == Some(0) {
            return Err(CliError::Usage("--block-size must be positive".into()));
        }
        let track = flags
            .track
            .map(|t| {
                t.split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        let default_method = match command {
            CommandKind::Gossip => "model1",
            CommandKind::Invert => "adarbfgs-cols",
            _ => "rk",
        };
        Ok(ExperimentConfig {
            command,
            method: flags.method.unwrap_or_else(|| default_method.to_string()),
            input,
            b_weight,
            block_size: flags.block_size,
            probabilities,
            seed: flags.seed.unwrap_or(0),
            tol,
            max_iters: flags.max_iters.unwrap_or(100_000),
            reps,
            out: flags.out,
            track,
        })
    }
}
