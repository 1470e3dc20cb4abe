use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ris_crlb::optimizer::PsoConfig;

use crate::commands::{
    csv_string, evaluate_cell, sweep_ris_count, sweep_ris_size, FimArg, PhaseMode, RunSettings,
};
use crate::error::{CliError, Result};
use crate::scenario_file::load_scenario;

/// Position and rotation error bounds for multi-RIS mmWave positioning.
#[derive(Debug, Parser)]
#[command(name = "ris-crlb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario JSON file; the bundled three-RIS scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// `paper` maps the full channel FIM through T; `efim` eliminates the path gains first.
    #[arg(long, value_enum, default_value = "paper")]
    fim: FimArg,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// PSO swarm size [default: 64 for single runs, 32 for sweeps].
    #[arg(long)]
    pso_swarm: Option<usize>,
    /// PSO iterations [default: 300 for single runs, 120 for sweeps].
    #[arg(long)]
    pso_iters: Option<usize>,
    /// Fill `wall_time_s`; otherwise it is 0 so output is reproducible byte for byte.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bounds for one phase profile.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "aligned")]
        phases: PhaseMode,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// PSO phase optimization of PEB + REB.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the optimized phases as JSON.
        #[arg(long)]
        phases_out: Option<PathBuf>,
    },
    /// LoS only, then RIS 1, RIS 1–2, … in file order.
    SweepRisCount {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "random,aligned,pso")]
        phases: Vec<PhaseMode>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seed: Vec<u64>,
    },
    /// Every RIS resized to each side length.
    SweepRisSize {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "random,aligned,pso")]
        phases: Vec<PhaseMode>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seed: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,12,16")]
        sizes: Vec<usize>,
    },
}

impl Common {
    fn settings(&self, swarm: usize, iters: usize) -> RunSettings {
        RunSettings {
            fim: self.fim,
            pso: PsoConfig {
                swarm_size: self.pso_swarm.unwrap_or(swarm),
                iterations: self.pso_iters.unwrap_or(iters),
                ..PsoConfig::default()
            },
            timing: self.timing,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<()> {
    let mut warnings = Vec::new();
    let (common, csv) = match command {
        Command::Bounds {
            common,
            phases,
            seed,
        } => {
            let loaded = load(&common, &mut warnings)?;
            let cell = evaluate_cell(&loaded.id, &loaded.scenario, phases, seed, &common.settings(64, 300))?;
            eprintln!(
                "{} K={} {:?}/{:?}: PEB = {:e} m, REB = {:e} rad",
                loaded.id,
                cell.row.k_active,
                phases,
                common.fim,
                cell.row.peb_m,
                cell.row.reb_rad
            );
            let csv = csv_string(&[cell.row])?;
            (common, csv)
        }
        Command::Optimize {
            common,
            seed,
            phases_out,
        } => {
            let loaded = load(&common, &mut warnings)?;
            let cell = evaluate_cell(&loaded.id, &loaded.scenario, PhaseMode::Pso, seed, &common.settings(64, 300))?;
            if let Some(run) = &cell.pso {
                eprintln!(
                    "{} evaluations; objective {:e} -> {:e}; PEB = {:e} m, REB = {:e} rad",
                    run.evaluations,
                    run.history[0],
                    run.best_objective,
                    cell.row.peb_m,
                    cell.row.reb_rad
                );
            }
            if let Some(path) = phases_out {
                let doc = serde_json::json!({
                    "delta": cell.phases.delta,
                    "theta_rad": cell.phases.theta,
                });
                let text = serde_json::to_string_pretty(&doc).expect("phases serialize");
                write_file(&path, &text)?;
            }
            let csv = csv_string(&[cell.row])?;
            (common, csv)
        }
        Command::SweepRisCount {
            common,
            phases,
            seed,
        } => {
            let loaded = load(&common, &mut warnings)?;
            let rows = sweep_ris_count(
                &loaded.id,
                &loaded.scenario,
                &phases,
                &seed,
                &common.settings(32, 120),
                &mut warnings,
            )?;
            let csv = csv_string(&rows)?;
            (common, csv)
        }
        Command::SweepRisSize {
            common,
            phases,
            seed,
            sizes,
        } => {
            let loaded = load(&common, &mut warnings)?;
            let rows = sweep_ris_size(
                &loaded.id,
                &loaded.scenario,
                &sizes,
                &phases,
                &seed,
                &common.settings(32, 120),
                &mut warnings,
            )?;
            let csv = csv_string(&rows)?;
            (common, csv)
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match &common.out {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn load(
    common: &Common,
    warnings: &mut Vec<String>,
) -> Result<crate::scenario_file::LoadedScenario> {
    let loaded = load_scenario(common.scenario.as_deref())?;
    warnings.extend(loaded.warnings.iter().cloned());
    Ok(loaded)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
