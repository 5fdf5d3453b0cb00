//! Scenario files, orchestration and on-disk artifacts.
//!
//! A scenario is a flat `section.key = value` document (see
//! [`config::KEYS`]). [`run_scenario`] evolves it and writes
//! `monitors.csv`, field snapshots and `manifest.json` into a run
//! directory.

mod check;
pub mod config;
mod run;

pub use check::{peakon_check, PeakonCheck, PEAKON_CHECK_TESTS};
pub use config::{
    parse_config, serialize_config, ConfigError, ScenarioConfig, ScenarioKind, Violation,
};
pub use run::{
    emit_plots, fmt_float, grid_of, initial_state, peakon_spec, read_state_csv, resolve_output_dir,
    run_scenario, run_scenario_observed, write_monitors, write_snapshot, InvariantSummary,
    Manifest, PeakSummary, RunOutcome, SnapshotRecord, MONITOR_COLUMNS,
};

use crate::Error;

/// Process exit statuses of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const NUMERICAL: i32 = 3;
    pub const IO: i32 = 4;
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Observer { .. } => exit::IO,
        Error::NonFinite
        | Error::NanInTendency { .. }
        | Error::OutsideHistory { .. }
        | Error::InsufficientData { .. } => exit::NUMERICAL,
        Error::InvalidGrid(_)
        | Error::LengthMismatch { .. }
        | Error::GridMismatch
        | Error::InvalidState(_)
        | Error::InvalidConfig(_)
        | Error::UnderResolvedMollifier { .. }
        | Error::SupportWrapsSeam { .. } => exit::CONFIG,
    }
}
