//! The `simulate`, `grid` and `report` subcommands.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use echoloop::dynamics::MEAN_DELTA;
use echoloop::metrics::{self, Aggregate, BoundCheck};
use echoloop::{run_grid, run_trial, Error as SimError};

use crate::config::{parse_grid_spec, parse_trial_config};
use crate::manifest::{now_ms, FailedCell, RunManifest};
use crate::output::{self, CellColumns, ResultRow};
use crate::CliError;

pub const TRACE_FILE: &str = "trace.csv";
pub const SNAPSHOTS_FILE: &str = "snapshots.csv";
pub const RESULTS_FILE: &str = "results.csv";
pub const FINALS_FILE: &str = "finals.csv";

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::InvalidConfig { .. } | SimError::Empty(_) => CliError::Invalid(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

fn write_file(
    dir: &Path,
    name: &str,
    manifest: &mut RunManifest,
    body: impl FnOnce(BufWriter<File>) -> csv::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(dir.join(name)).map_err(runtime)?;
    body(BufWriter::new(file)).map_err(runtime)?;
    manifest.files.push(name.to_string());
    Ok(())
}

/// Run one trial and write its trace, snapshots and manifest.
pub fn simulate(
    config_path: &Path,
    output_dir: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let started = now_ms();
    let mut config = parse_trial_config(&read_input(config_path)?)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    let trace = run_trial(&config).map_err(sim_error)?;

    fs::create_dir_all(output_dir).map_err(runtime)?;
    let echo = serde_json::to_value(&config).map_err(runtime)?;
    let mut manifest = RunManifest::new("simulate", echo, started);
    write_file(output_dir, TRACE_FILE, &mut manifest, |w| {
        output::write_trace_csv(&trace, w)
    })?;
    write_file(output_dir, SNAPSHOTS_FILE, &mut manifest, |w| {
        output::write_snapshots_csv(&trace, w)
    })?;
    manifest.write(output_dir).map_err(runtime)
}

/// Run a grid and write aggregated results, per-trial values and a manifest.
/// Cells that fail are listed in the manifest and reported as a partial failure.
pub fn grid(
    grid_path: &Path,
    output_dir: &Path,
    parallelism: usize,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let started = now_ms();
    let mut spec = parse_grid_spec(&read_input(grid_path)?)?;
    if let Some(seed) = seed {
        spec.master_seed = seed;
    }
    let result = run_grid(&spec, parallelism).map_err(sim_error)?;

    fs::create_dir_all(output_dir).map_err(runtime)?;
    let echo = serde_json::to_value(&spec).map_err(runtime)?;
    let mut manifest = RunManifest::new("grid", echo, started);
    write_file(output_dir, RESULTS_FILE, &mut manifest, |w| {
        output::write_results_csv(&result, w)
    })?;
    write_file(output_dir, FINALS_FILE, &mut manifest, |w| {
        output::write_finals_csv(&result, w)
    })?;
    manifest.failed_cells = result
        .failures
        .iter()
        .map(|f| FailedCell {
            cell: f.cell.to_string(),
            error: f.error.to_string(),
        })
        .collect();
    manifest.write(output_dir).map_err(runtime)?;

    if result.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::PartialGrid(
            manifest
                .failed_cells
                .iter()
                .map(|f| format!("{}: {}", f.cell, f.error))
                .collect(),
        ))
    }
}

/// Summary of one cell: its latest `max_interest` row against the ceilings.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportLine {
    pub cell: CellColumns,
    pub row: Option<ResultRow>,
    pub check: BoundCheck,
}

impl std::fmt::Display for ReportLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let Some(row) = &self.row else {
            return write!(f, "{}  no max_interest row", self.cell);
        };
        let bound = row
            .restart_bound
            .map_or_else(|| "-".to_string(), |b| format!("{b:.4}"));
        let status = match self.check {
            BoundCheck::Satisfied => "ok",
            BoundCheck::Violated => "VIOLATED",
            BoundCheck::NotApplicable => "n/a",
        };
        write!(
            f,
            "{}  max_interest@{} = {:.4} ± {:.4}  bound={}  ceiling={:.4}  {}",
            self.cell, row.step, row.mean, row.half_width, bound, row.growth_ceiling, status
        )
    }
}

pub fn build_report(rows: &[ResultRow]) -> Vec<ReportLine> {
    let mut lines: Vec<ReportLine> = Vec::new();
    for row in rows {
        let idx = match lines.iter().position(|l| l.cell == row.cell) {
            Some(i) => i,
            None => {
                lines.push(ReportLine {
                    cell: row.cell.clone(),
                    row: None,
                    check: BoundCheck::NotApplicable,
                });
                lines.len() - 1
            }
        };
        let line = &mut lines[idx];
        let newer = line.row.as_ref().is_none_or(|r| row.step >= r.step);
        if row.metric == "max_interest" && newer {
            let observed = Aggregate {
                mean: row.mean,
                half_width: row.half_width,
            };
            let ceiling = metrics::growth_ceiling(row.step, MEAN_DELTA, 1.0);
            line.check = metrics::check_bound(observed, row.restart_bound, ceiling);
            line.row = Some(row.clone());
        }
    }
    lines
}

/// Print one summary line per cell. With `strict`, any violated bound is an error.
pub fn report(results_path: &Path, strict: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let file = File::open(results_path)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", results_path.display())))?;
    let rows = output::read_results_csv(file)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", results_path.display())))?;
    let lines = build_report(&rows);
    for line in &lines {
        match writeln!(out, "{line}") {
            Ok(()) => {}
            // reader went away (e.g. piped into `head`); stop printing quietly
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => break,
            Err(e) => return Err(runtime(e)),
        }
    }
    let violations = lines
        .iter()
        .filter(|l| l.check == BoundCheck::Violated)
        .count();
    if strict && violations > 0 {
        return Err(CliError::BoundViolated(violations));
    }
    Ok(())
}
