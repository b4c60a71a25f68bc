//! Seeded experiment sweeps: scenario configs, parallel runs over instances,
//! CSV tables and summaries.

pub mod config;
pub mod output;
pub mod run;

pub use config::{preset, CdInit, ScenarioConfig, Scheme, Sweep, SweepAxis, PRESETS};
pub use output::{emit_csv, emit_summary, parse_csv, to_csv_string, write_csv};
pub use run::{run_scenario, ResultRow, ResultTable};
