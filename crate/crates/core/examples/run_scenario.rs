//! Runs a scenario from a TOML file (default: the bundled sample) and prints
//! the CSV table and summary.
//!
//! cargo run --release --example run_scenario -- path/to/config.toml

use wpmec::harness::{emit_summary, run_scenario, to_csv_string, ScenarioConfig};

fn main() -> wpmec::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/pathloss_sweep.toml").into());
    let cfg = ScenarioConfig::load(&path)?;
    let table = run_scenario(&cfg)?;
    print!("{}", to_csv_string(&table.rows)?);
    println!();
    print!("{}", emit_summary(&table));
    Ok(())
}
