use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wpmec::harness::config::FULL_SCALE_FADINGS;
use wpmec::harness::{emit_csv, emit_summary, preset, run_scenario, to_csv_string, ScenarioConfig, PRESETS};

#[derive(Parser)]
#[command(
    version,
    about = "Mode selection and time allocation sweeps for wireless powered edge computing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOptions {
    /// Write the result table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use 100 fading realizations per placement.
    #[arg(long)]
    paper_scale: bool,
    /// Write 0 in the time column so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Run a built-in scenario, or list them when no name is given.
    Presets {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        name: Option<String>,
        /// Print the preset as a TOML config instead of running it.
        #[arg(long)]
        print_config: bool,
        #[command(flatten)]
        opts: RunOptions,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn execute(mut cfg: ScenarioConfig, opts: &RunOptions) -> wpmec::Result<bool> {
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if opts.paper_scale {
        cfg.fadings = FULL_SCALE_FADINGS;
    }
    if opts.no_timing {
        cfg.record_time = false;
    }
    let table = run_scenario(&cfg)?;
    match &opts.out {
        Some(path) => emit_csv(&table, path)?,
        None => print!("{}", to_csv_string(&table.rows)?),
    }
    eprint!("{}", emit_summary(&table));
    Ok(table.invariants_held())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, opts } => ScenarioConfig::load(&config).and_then(|c| execute(c, &opts)),
        Command::Presets { name: None, .. } => {
            for name in PRESETS {
                println!("{name}");
            }
            Ok(true)
        }
        Command::Presets {
            name: Some(name),
            print_config,
            opts,
        } => preset(&name).and_then(|c| {
            if print_config {
                print!("{}", c.to_toml_string()?);
                Ok(true)
            } else {
                execute(c, &opts)
            }
        }),
        Command::Validate { config } => ScenarioConfig::load(&config).map(|c| {
            println!(
                "ok: {} sweep values x {} placements x {} fadings, schemes {}",
                c.sweep.values.len(),
                c.placements,
                c.fadings,
                c.schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(",")
            );
            true
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
