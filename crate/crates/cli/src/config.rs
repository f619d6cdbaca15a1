use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use dfs_kerr::dfs_gates::GateKind;
use dfs_kerr::loss_fidelity::DEFAULT_STEPS;

use crate::error::{CliError, Result};
use crate::grid::parse_grid;

#[derive(Debug, Parser)]
#[command(name = "dfs-kerr", version, about = "Cross-Kerr logical gates on decoherence-free photonic qubits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run every basis input (plus seeded random superpositions) through all
    /// measurement branches and report output fidelities.
    TruthTable,
    /// Readout and gate success probabilities over an amplitude grid.
    SweepAlpha,
    /// Readout and gate success probabilities over a phase-shift grid.
    SweepTheta,
    /// Gate fidelity under probe loss over a (gamma_t, delta/d) grid.
    FidelitySurface,
    /// Monte-Carlo gate runs with sampled homodyne readouts.
    Sample,
    /// Dump every enumerated measurement branch.
    Branches,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TruthTable => "truth-table",
            Command::SweepAlpha => "sweep-alpha",
            Command::SweepTheta => "sweep-theta",
            Command::FidelitySurface => "fidelity-surface",
            Command::Sample => "sample",
            Command::Branches => "branches",
        }
    }
}

/// Flags shared by every command. Values stay raw so that flags and the
/// config file go through the same parser.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub gate: Option<String>,
    /// Single value, comma list or start:stop:step.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long = "gamma-t", global = true, allow_hyphen_values = true)]
    pub gamma_t: Option<String>,
    #[arg(long = "delta-over-d", global = true, allow_hyphen_values = true)]
    pub delta_over_d: Option<String>,
    /// Riemann steps for the loss integral.
    #[arg(long, global = true, value_name = "N")]
    pub steps: Option<String>,
    #[arg(long, global = true)]
    pub samples: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub seed: Option<String>,
    /// Number of seeded random input superpositions.
    #[arg(long, global = true, value_name = "K")]
    pub random: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// key=value file; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<String>,
    /// Also write a gnuplot script next to the --out file.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub gate: GateKind,
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    pub gamma_t: Vec<f64>,
    pub delta_over_d: Vec<f64>,
    pub steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub random: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: usize,
    pub gnuplot: bool,
}

const KEYS: [&str; 13] = [
    "gate",
    "alpha",
    "theta",
    "gamma-t",
    "delta-over-d",
    "steps",
    "samples",
    "seed",
    "random",
    "out",
    "format",
    "jobs",
    "gnuplot",
];

/// Reads a `key=value` file; `#` starts a comment, `_` and `-` are
/// interchangeable in keys.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_config(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| CliError::config(format!("line {}: expected key=value", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!("line {}: unknown key `{key}`", n + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::config(format!("line {}: `{key}` set twice", n + 1)));
        }
    }
    Ok(map)
}

fn parse_int<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim().parse().map_err(|_| CliError::config(format!("--{key}: expected a non-negative integer, got `{raw}`")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(CliError::config(format!("{key}: expected true or false, got `{other}`"))),
    }
}

impl RunConfig {
    /// Flags override `file`, which overrides the command's defaults.
    pub fn resolve(command: Command, flags: &Flags, file: &BTreeMap<String, String>) -> Result<Self> {
        let pick = |key: &str, flag: &Option<String>| flag.clone().or_else(|| file.get(key).cloned());
        let grid = |key: &str, flag: &Option<String>, default: &str| -> Result<Vec<f64>> {
            let raw = pick(key, flag).unwrap_or_else(|| default.to_string());
            parse_grid(&raw).map_err(|e| CliError::config(format!("--{key}: {e}")))
        };

        let (alpha_default, theta_default, gamma_default) = match command {
            Command::SweepAlpha => ("5:100:5", "0.35", "0,0.5,1"),
            Command::SweepTheta => ("70", "0.01:0.52:0.01", "0,0.5,1"),
            Command::FidelitySurface => ("70", "0.35", "0,0.5,1"),
            _ => ("70", "0.35", "0"),
        };

        let gate = match pick("gate", &flags.gate) {
            Some(g) => g.parse::<GateKind>().map_err(|e| CliError::config(format!("--gate: {e}")))?,
            None => GateKind::Cnot,
        };
        let steps = match pick("steps", &flags.steps) {
            Some(s) => parse_int::<usize>("steps", &s)?,
            None => DEFAULT_STEPS,
        };
        let samples = match pick("samples", &flags.samples) {
            Some(s) => parse_int::<usize>("samples", &s)?,
            None => 10_000,
        };
        let seed = match pick("seed", &flags.seed) {
            Some(s) => parse_int::<u64>("seed", &s)?,
            None => 0,
        };
        let random = match pick("random", &flags.random) {
            Some(s) => parse_int::<usize>("random", &s)?,
            None => 0,
        };
        let format = match pick("format", &flags.format).as_deref().map(str::trim) {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(CliError::config(format!("--format: expected csv or json, got `{other}`"))),
        };
        let jobs = match pick("jobs", &flags.jobs) {
            Some(s) => parse_int::<usize>("jobs", &s)?,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        let out = flags.out.clone().or_else(|| file.get("out").map(PathBuf::from));
        let gnuplot = flags.gnuplot || file.get("gnuplot").map(|v| parse_bool("gnuplot", v)).transpose()?.unwrap_or(false);

        let config = RunConfig {
            command,
            gate,
            alpha: grid("alpha", &flags.alpha, alpha_default)?,
            theta: grid("theta", &flags.theta, theta_default)?,
            gamma_t: grid("gamma-t", &flags.gamma_t, gamma_default)?,
            delta_over_d: grid("delta-over-d", &flags.delta_over_d, "0,0.2,0.4,0.6,0.8,0.95")?,
            steps,
            samples,
            seed,
            random,
            out,
            format,
            jobs,
            gnuplot,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(CliError::config("--steps must be at least 1"));
        }
        if self.samples == 0 {
            return Err(CliError::config("--samples must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        if self.gnuplot && self.out.is_none() {
            return Err(CliError::config("--gnuplot needs --out for the data file the script plots"));
        }
        Ok(())
    }

    /// Every parameter that affects the output, in display order.
    pub fn parameters(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|x| dfs_kerr::loss_fidelity::format_sig(*x)).collect::<Vec<_>>().join(",");
        let mut p = vec![("command", self.command.name().to_string())];
        let uses_gate = !matches!(self.command, Command::SweepAlpha | Command::SweepTheta);
        if uses_gate {
            p.push(("gate", self.gate.name().to_string()));
        }
        p.push(("alpha", list(&self.alpha)));
        p.push(("theta", list(&self.theta)));
        p.push(("gamma_t", list(&self.gamma_t)));
        match self.command {
            Command::FidelitySurface => {
                p.push(("delta_over_d", list(&self.delta_over_d)));
                p.push(("N", self.steps.to_string()));
            }
            Command::Sample => {
                p.push(("samples", self.samples.to_string()));
                p.push(("seed", self.seed.to_string()));
            }
            Command::TruthTable | Command::Branches => {
                p.push(("random", self.random.to_string()));
                p.push(("seed", self.seed.to_string()));
            }
            Command::SweepAlpha | Command::SweepTheta => {}
        }
        p.push((
            "format",
            match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            }
            .to_string(),
        ));
        p
    }
}
