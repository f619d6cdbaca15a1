//! Command-line front end: truth tables, success-probability sweeps, lossy
//! fidelity surfaces and sampled runs for the DFS Kerr gates.

pub mod commands;
pub mod config;
pub mod error;
pub mod grid;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::Path;

use clap::Parser;

use crate::config::{read_config_file, Cli, RunConfig};
use crate::error::{CliError, Result, EXIT_CONFIG, EXIT_OK};

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    let file = match &cli.flags.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let config = RunConfig::resolve(cli.command, &cli.flags, &file)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::config(format!("cannot start {} worker threads: {e}", config.jobs)))?;
    let output = pool.install(|| commands::run(&config))?;
    let rendered = output.table.render(config.format);
    match &config.out {
        Some(path) => {
            write_file(path, &rendered)?;
            if config.gnuplot {
                let script = commands::gnuplot_script(&config, &path.display().to_string()).ok_or_else(|| {
                    CliError::config(format!("--gnuplot is not available for {}", config.command.name()))
                })?;
                let mut gp = path.as_os_str().to_owned();
                gp.push(".gp");
                write_file(Path::new(&gp), &script)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.as_bytes())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })?;
        }
    }
    Ok(output.exit_code)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}
