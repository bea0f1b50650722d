use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsense::config::{self, AdaptiveFile, ArGatherFile, GatherFile, PhaseTransitionFile, SenseSweepFile};
use sparsense::run;
use sparsense::table::{aggregate_path, Table};

/// Compressive wideband sensing and D2D gathering experiments.
#[derive(Parser)]
#[command(name = "sparsense", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strategy × measurement-ratio sweep; writes detail and aggregate CSVs.
    SenseSweep {
        #[command(flatten)]
        common: Common,
        /// Record real recovery time in wall_time_s (output is then not reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Minimal measurements per sparsity for OMP exact recovery.
    PhaseTransition(Common),
    /// Clique / aggregation-tree D2D gathering rounds.
    GatherSim(Common),
    /// Autoregressive D2D gathering over consecutive rounds.
    ArGather(Common),
    /// Two-step measurement adjustment.
    AdaptiveDemo(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 = one per core. Never changes results.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn write(table: &Table, path: &Path) -> Result<(), String> {
    table.write(path).map_err(|e| e.to_string())
}

fn execute(command: Command) -> Result<(), String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match command {
        Command::SenseSweep { common, timing } => {
            let file: SenseSweepFile = config::load(&common.config).map_err(|e| err(&e))?;
            let cfg = file.build(common.seed).map_err(|e| err(&e))?;
            let result = run::sweep(&cfg, common.threads, timing).map_err(|e| err(&e))?;
            let (detail, aggregate) = run::sweep_tables(&result);
            write(&detail, &common.out)?;
            write(&aggregate, &aggregate_path(&common.out))
        }
        Command::PhaseTransition(common) => {
            let file: PhaseTransitionFile = config::load(&common.config).map_err(|e| err(&e))?;
            let cfg = file.build(common.seed).map_err(|e| err(&e))?;
            let result = run::with_threads(common.threads, || run::run_phase_transition(&cfg))
                .map_err(|e| err(&e))?
                .map_err(|e| err(&e))?;
            write(&run::phase_table(&result), &common.out)
        }
        Command::GatherSim(common) => {
            let file: GatherFile = config::load(&common.config).map_err(|e| err(&e))?;
            let s = file.build(common.seed).map_err(|e| err(&e))?;
            let rows = run::gather_sim(&s, common.threads).map_err(|e| err(&e))?;
            write(&run::gather_table(&s, &rows), &common.out)
        }
        Command::ArGather(common) => {
            let file: ArGatherFile = config::load(&common.config).map_err(|e| err(&e))?;
            let s = file.build(common.seed).map_err(|e| err(&e))?;
            let rows = run::ar_gather(&s).map_err(|e| err(&e))?;
            write(&run::ar_table(&rows), &common.out)
        }
        Command::AdaptiveDemo(common) => {
            let file: AdaptiveFile = config::load(&common.config).map_err(|e| err(&e))?;
            let s = file.build(common.seed).map_err(|e| err(&e))?;
            let rows = run::adaptive_demo(&s, common.threads).map_err(|e| err(&e))?;
            write(&run::adaptive_table(&s, &rows), &common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("sparsense: {msg}");
            ExitCode::FAILURE
        }
    }
}
