use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gbbmb_cli::output::{summary_rows, verify_rows};
use gbbmb_cli::{cmd_run, cmd_sweep, cmd_verify, sweep_exit_code, CliError, ExperimentConfig};

/// Simulate the gBBMB equation on star networks.
///
/// Exit status: 0 success, 1 config error, 2 instability,
/// 3 verification inconclusive.
#[derive(Debug, Parser)]
#[command(name = "gbbmb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write diagnostics, summary and schema files.
    Run(Common),
    /// Run one experiment per value of a numeric parameter, in parallel.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary, addressed like `--set` keys (e.g. edge.2.mu).
        #[arg(long)]
        param: String,
        /// Comma-separated values; an empty list produces an empty aggregate.
        #[arg(long, default_value = "")]
        values: String,
    },
    /// Compare the finite-difference solver with the Picard oracle.
    Verify(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry, e.g. `--set edge.2.mu=1.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot stride in time steps (overrides output.stride).
    #[arg(long)]
    stride: Option<usize>,
    /// Also write space-time field snapshots.
    #[arg(long)]
    fields: bool,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), CliError> {
        let mut overrides = self.overrides.clone();
        if let Some(s) = self.stride {
            overrides.push(format!("output.stride={s}"));
        }
        if self.fields {
            overrides.push("output.fields=true".into());
        }
        let cfg = ExperimentConfig::load(&self.config, &overrides)?;
        let dir = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        Ok((cfg, dir))
    }
}

fn parse_values(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| CliError::config("--values", format!("`{v}` is not a number")))
        })
        .collect()
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run(common) => {
            let (cfg, dir) = common.load()?;
            let outcome = cmd_run(&cfg, &dir)?;
            for (k, v) in summary_rows(&outcome.summary) {
                println!("{k} = {v}");
            }
            Ok(0)
        }
        Command::Sweep { common, param, values } => {
            let (cfg, dir) = common.load()?;
            let values = parse_values(&values)?;
            let rows = cmd_sweep(&cfg, &param, &values, &dir)?;
            for r in &rows {
                println!(
                    "{param} = {}: {} reflected = {}",
                    r.value,
                    r.status,
                    r.reflected.map(|b| b.to_string()).unwrap_or_else(|| "-".into())
                );
            }
            Ok(sweep_exit_code(&rows))
        }
        Command::Verify(common) => {
            let (cfg, dir) = common.load()?;
            let result = cmd_verify(&cfg, &dir);
            if let Ok(report) = &result {
                for (k, v) in verify_rows(report) {
                    println!("{k} = {v}");
                }
            }
            result.map(|_| 0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("gbbmb: {e}");
            ExitCode::from(&e)
        }
    }
}
