//! Experiment commands: each produces rows of the result CSV.

use std::io::Write;
use std::time::Instant;

use ris_crlb::channel::PhaseProfile;
use ris_crlb::fim::{BoundsEvaluator, FimMode};
use ris_crlb::optimizer::{
    beam_aligned_phases, pso_with_evaluator, random_phases, Objective, PsoConfig, PsoRun,
};
use ris_crlb::scenario::Scenario;
use ris_crlb::{par, Error};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const CSV_HEADER: &str =
    "scenario_id,K_active,L,phase_mode,fim_mode,seed,peb_m,reb_rad,objective,wall_time_s";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    Random,
    Aligned,
    Pso,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FimArg {
    Paper,
    Efim,
}

impl From<FimArg> for FimMode {
    fn from(f: FimArg) -> Self {
        match f {
            FimArg::Paper => FimMode::PaperLiteral,
            FimArg::Efim => FimMode::Efim,
        }
    }
}

/// One line of the result CSV; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario_id: String,
    #[serde(rename = "K_active")]
    pub k_active: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub phase_mode: PhaseMode,
    pub fim_mode: FimArg,
    pub seed: u64,
    pub peb_m: f64,
    pub reb_rad: f64,
    pub objective: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunSettings {
    pub fim: FimArg,
    /// Swarm parameters for `pso` cells; the seed is overridden per cell.
    pub pso: PsoConfig,
    /// Record wall-clock time per cell. Off by default so output is byte-reproducible.
    pub timing: bool,
}

/// Result of one configuration: the row plus the phases it was evaluated at.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub row: SweepRow,
    pub phases: PhaseProfile,
    pub pso: Option<PsoRun>,
}

struct Cell {
    scenario: Scenario,
    mode: PhaseMode,
    seed: u64,
}

/// Side length reported in the `L` column: the first surface's, 0 without surfaces.
fn side_of(s: &Scenario) -> usize {
    s.ris.first().map_or(0, |r| r.side)
}

/// Evaluates PEB, REB and their sum for one configuration.
pub fn evaluate_cell(
    id: &str,
    scenario: &Scenario,
    mode: PhaseMode,
    seed: u64,
    settings: &RunSettings,
) -> Result<CellResult> {
    let start = Instant::now();
    let objective = Objective::default();
    let evaluator = BoundsEvaluator::new(scenario, settings.fim.into())?;
    let (phases, pso) = match mode {
        PhaseMode::Random => (random_phases(scenario, seed), None),
        PhaseMode::Aligned => (beam_aligned_phases(scenario, &evaluator.geometry), None),
        PhaseMode::Pso => {
            let config = PsoConfig {
                seed,
                ..settings.pso.clone()
            };
            let run = pso_with_evaluator(scenario, &evaluator, objective, &config)?;
            (run.best_phases.clone(), Some(run))
        }
    };
    let bounds = evaluator.bounds(&phases)?;
    let wall_time_s = if settings.timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    Ok(CellResult {
        row: SweepRow {
            scenario_id: id.to_owned(),
            k_active: scenario.num_ris(),
            l: side_of(scenario),
            phase_mode: mode,
            fim_mode: settings.fim,
            seed,
            peb_m: bounds.peb,
            reb_rad: bounds.reb,
            objective: objective.value(&bounds),
            wall_time_s,
        },
        phases,
        pso,
    })
}

/// Runs independent cells in parallel and returns rows in cell order. A cell whose
/// FIM is singular is a data point, not a failure: it is reported with infinite
/// bounds and a warning.
fn run_cells(
    id: &str,
    cells: &[Cell],
    settings: &RunSettings,
    warnings: &mut Vec<String>,
) -> Result<Vec<SweepRow>> {
    let results = par::map_slice(cells, |c| evaluate_cell(id, &c.scenario, c.mode, c.seed, settings));
    let mut rows = Vec::with_capacity(cells.len());
    for (cell, result) in cells.iter().zip(results) {
        match result {
            Ok(r) => rows.push(r.row),
            Err(CliError::Singular(e @ (Error::SingularFim { .. } | Error::AllSingular))) => {
                warnings.push(format!(
                    "K_active={} L={} {:?} seed {}: {e}; bounds reported as inf",
                    cell.scenario.num_ris(),
                    side_of(&cell.scenario),
                    cell.mode,
                    cell.seed
                ));
                rows.push(SweepRow {
                    scenario_id: id.to_owned(),
                    k_active: cell.scenario.num_ris(),
                    l: side_of(&cell.scenario),
                    phase_mode: cell.mode,
                    fim_mode: settings.fim,
                    seed: cell.seed,
                    peb_m: f64::INFINITY,
                    reb_rad: f64::INFINITY,
                    objective: f64::INFINITY,
                    wall_time_s: 0.0,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Surfaces `{}`, `{1}`, `{1,2}`, …, `{1..K}` in file order; rows ordered by
/// `(K_active, phase mode, seed)`.
pub fn sweep_ris_count(
    id: &str,
    scenario: &Scenario,
    modes: &[PhaseMode],
    seeds: &[u64],
    settings: &RunSettings,
    warnings: &mut Vec<String>,
) -> Result<Vec<SweepRow>> {
    if scenario.num_ris() == 0 {
        return Err(Error::Config("sweep-ris-count needs at least one RIS".into()).into());
    }
    let cells = (0..=scenario.num_ris())
        .flat_map(|k| cells_for(scenario.with_active_ris(k), modes, seeds))
        .collect::<Vec<_>>();
    run_cells(id, &cells, settings, warnings)
}

/// Every surface resized to each side length in turn; rows ordered by
/// `(L, phase mode, seed)`.
pub fn sweep_ris_size(
    id: &str,
    scenario: &Scenario,
    sides: &[usize],
    modes: &[PhaseMode],
    seeds: &[u64],
    settings: &RunSettings,
    warnings: &mut Vec<String>,
) -> Result<Vec<SweepRow>> {
    if sides.is_empty() || sides.iter().any(|&l| l < 2) {
        return Err(Error::Config("RIS sizes must be non-empty and each at least 2".into()).into());
    }
    if scenario.num_ris() == 0 {
        return Err(Error::Config("sweep-ris-size needs at least one RIS".into()).into());
    }
    let cells = sides
        .iter()
        .flat_map(|&l| cells_for(scenario.with_ris_side(l), modes, seeds))
        .collect::<Vec<_>>();
    run_cells(id, &cells, settings, warnings)
}

fn cells_for(scenario: Scenario, modes: &[PhaseMode], seeds: &[u64]) -> Vec<Cell> {
    modes
        .iter()
        .flat_map(|&mode| {
            let scenario = scenario.clone();
            seeds.iter().map(move |&seed| Cell {
                scenario: scenario.clone(),
                mode,
                seed,
            })
        })
        .collect()
}

/// Serializes rows with the fixed header; floats use the shortest decimal that
/// round-trips.
pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| CliError::io("<csv output>", e))?;
    Ok(())
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}
