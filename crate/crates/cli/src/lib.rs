//! Experiment runner for gBBMB star-network simulations: TOML configs with
//! `--set` overrides, single runs, parallel parameter sweeps and
//! cross-validation against the Picard oracle, all emitting CSV.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{BootstrapKind, ExperimentConfig, InitialCondition};
pub use error::CliError;
pub use experiment::{
    cmd_run, cmd_sweep, cmd_verify, simulate, sweep_exit_code, verify, RunOutcome, RunStatus, RunSummary, SweepRow,
    VerifyReport, VerifyStatus,
};
