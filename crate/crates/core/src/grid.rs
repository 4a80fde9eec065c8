//! Parameter-grid sweeps with repeated trials per cell.
//!
//! Each trial's stream is derived from the master seed, the cell's parameter
//! values and the trial index, so results do not depend on execution order,
//! on the thread count, or on which other cells are in the grid.

use serde::{Deserialize, Serialize};

use crate::dynamics::{InterestModel, MEAN_DELTA};
use crate::engine::{self, Simulation, TrialConfig, DEFAULT_SNAPSHOT_EVERY};
use crate::error::{Error, Result};
use crate::metrics::{self, Aggregate, Metric, MetricSnapshot};
use crate::policies::PolicySpec;

/// Policy names accepted in a grid; ε values come from a separate list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Ts,
    Greedy,
    Optimal,
    Random,
}

/// Swept interest-model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelGrid {
    Basic,
    AdditiveNoise {
        noise_widths: Vec<f64>,
    },
    Restarts {
        restart_probabilities: Vec<f64>,
        restart_scales: Vec<f64>,
    },
}

impl ModelGrid {
    fn expand(&self) -> Vec<InterestModel> {
        match self {
            ModelGrid::Basic => vec![InterestModel::Basic],
            ModelGrid::AdditiveNoise { noise_widths } => noise_widths
                .iter()
                .map(|&noise_width| InterestModel::AdditiveNoise { noise_width })
                .collect(),
            ModelGrid::Restarts {
                restart_probabilities,
                restart_scales,
            } => restart_probabilities
                .iter()
                .flat_map(|&q| {
                    restart_scales.iter().map(move |&s| InterestModel::Restarts {
                        restart_probability: q,
                        restart_scale: s,
                    })
                })
                .collect(),
        }
    }
}

/// A sweep over item counts, selection sizes, policies and model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub item_counts: Vec<usize>,
    pub select_counts: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    /// Used for every `greedy` entry in `policies`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    pub model: ModelGrid,
    pub trials: usize,
    pub horizon: usize,
    #[serde(rename = "seed")]
    pub master_seed: u64,
    /// Extra steps at which metrics are aggregated besides the horizon.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<usize>,
}

/// One parameter tuple of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub item_count: usize,
    pub select_count: usize,
    pub policy: PolicySpec,
    pub model: InterestModel,
}

impl Cell {
    pub fn id(&self) -> u64 {
        engine::cell_id(self.item_count, self.select_count, &self.policy, &self.model)
    }

    pub fn validate(&self) -> Result<()> {
        self.trial_config(0, 0, 0).validate()
    }

    pub fn trial_config(&self, horizon: usize, master_seed: u64, trial_index: u64) -> TrialConfig {
        TrialConfig {
            item_count: self.item_count,
            select_count: self.select_count,
            horizon,
            policy: self.policy,
            model: self.model,
            master_seed,
            trial_index,
            snapshot_every: DEFAULT_SNAPSHOT_EVERY,
        }
    }

    /// Restart ceiling at the mean δ; `None` for models without restarts.
    pub fn restart_bound(&self) -> Option<f64> {
        match self.model {
            InterestModel::Restarts {
                restart_probability,
                restart_scale,
            } => metrics::restart_bound(restart_probability, restart_scale, MEAN_DELTA).ok(),
            _ => None,
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "M={} l={} policy={}",
            self.item_count,
            self.select_count,
            self.policy.name()
        )?;
        if let Some(eps) = self.policy.epsilon() {
            write!(f, " epsilon={eps}")?;
        }
        match self.model {
            InterestModel::Basic => write!(f, " model=basic"),
            InterestModel::AdditiveNoise { noise_width } => write!(f, " w={noise_width}"),
            InterestModel::Restarts {
                restart_probability,
                restart_scale,
            } => write!(f, " q={restart_probability} s={restart_scale}"),
        }
    }
}

impl GridSpec {
    /// Structural checks. Parameter domains are checked per cell at run time.
    pub fn validate(&self) -> Result<()> {
        let nonempty = |empty: bool, field: &'static str| {
            if empty {
                Err(Error::config(field, "list must not be empty"))
            } else {
                Ok(())
            }
        };
        nonempty(self.item_counts.is_empty(), "item_counts")?;
        nonempty(self.select_counts.is_empty(), "select_counts")?;
        nonempty(self.policies.is_empty(), "policies")?;
        if self.policies.contains(&PolicyKind::Greedy) {
            nonempty(self.epsilons.is_empty(), "epsilons")?;
        }
        match &self.model {
            ModelGrid::Basic => {}
            ModelGrid::AdditiveNoise { noise_widths } => {
                nonempty(noise_widths.is_empty(), "noise_widths")?
            }
            ModelGrid::Restarts {
                restart_probabilities,
                restart_scales,
            } => {
                nonempty(restart_probabilities.is_empty(), "restart_probabilities")?;
                nonempty(restart_scales.is_empty(), "restart_scales")?;
            }
        }
        if self.item_counts.contains(&0) {
            return Err(Error::config("item_counts", "values must be at least 1"));
        }
        if self.select_counts.contains(&0) {
            return Err(Error::config("select_counts", "values must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(&bad) = self
            .checkpoints
            .iter()
            .find(|&&c| c == 0 || c > self.horizon)
        {
            return Err(Error::config(
                "checkpoints",
                format!("{bad} is outside 1..={}", self.horizon),
            ));
        }
        if self.cells().is_empty() {
            return Err(Error::Empty("grid has no cell with l < M"));
        }
        Ok(())
    }

    /// All parameter tuples with `l < M`, in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let policies: Vec<PolicySpec> = self
            .policies
            .iter()
            .flat_map(|kind| match kind {
                PolicyKind::Ts => vec![PolicySpec::Ts],
                PolicyKind::Greedy => self
                    .epsilons
                    .iter()
                    .map(|&epsilon| PolicySpec::Greedy { epsilon })
                    .collect(),
                PolicyKind::Optimal => vec![PolicySpec::Optimal],
                PolicyKind::Random => vec![PolicySpec::Random],
            })
            .collect();
        let models = self.model.expand();
        let mut cells = Vec::new();
        for &item_count in &self.item_counts {
            for &select_count in &self.select_counts {
                if select_count >= item_count {
                    continue;
                }
                for &policy in &policies {
                    for &model in &models {
                        cells.push(Cell {
                            item_count,
                            select_count,
                            policy,
                            model,
                        });
                    }
                }
            }
        }
        cells
    }

    /// Steps at which metrics are kept: the checkpoints and the horizon.
    pub fn recorded_steps(&self) -> Vec<usize> {
        let mut steps = self.checkpoints.clone();
        steps.push(self.horizon);
        steps.sort_unstable();
        steps.dedup();
        steps
    }
}

/// Cross-trial statistics for one metric of one cell at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: Metric,
    pub step: usize,
    pub mean: f64,
    pub half_width: f64,
    pub trials: usize,
    pub min: f64,
    pub max: f64,
}

impl MetricRow {
    pub fn aggregate(&self) -> Aggregate {
        Aggregate {
            mean: self.mean,
            half_width: self.half_width,
        }
    }
}

/// Metrics of one trial at each recorded step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFinals {
    pub trial_index: u64,
    pub metrics: Vec<MetricSnapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub rows: Vec<MetricRow>,
    pub trials: Vec<TrialFinals>,
}

impl CellSummary {
    pub fn row(&self, metric: Metric, step: usize) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.step == step)
    }

    /// Per-trial values of `metric` at `step`, in trial order.
    pub fn values(&self, metric: Metric, step: usize) -> Vec<f64> {
        self.trials
            .iter()
            .filter_map(|t| t.metrics.iter().find(|m| m.step == step))
            .map(|m| m.get(metric))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: Cell,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<CellSummary>,
    pub failures: Vec<CellFailure>,
}

impl GridResult {
    pub fn find(&self, pred: impl Fn(&Cell) -> bool) -> Option<&CellSummary> {
        self.cells.iter().find(|c| pred(&c.cell))
    }
}

/// Run every `(cell, trial)` pair once and aggregate per cell.
///
/// `parallelism` is the worker count; output is identical for every value.
pub fn run_grid(grid: &GridSpec, parallelism: usize) -> Result<GridResult> {
    grid.validate()?;
    if parallelism == 0 {
        return Err(Error::config("parallelism", "must be at least 1"));
    }
    let cells = grid.cells();
    let steps = grid.recorded_steps();

    let mut failures = Vec::new();
    let mut runnable = Vec::new();
    for cell in cells {
        match cell.validate() {
            Ok(()) => runnable.push(cell),
            Err(error) => failures.push(CellFailure { cell, error }),
        }
    }

    let tasks: Vec<(usize, u64)> = (0..runnable.len())
        .flat_map(|c| (0..grid.trials as u64).map(move |t| (c, t)))
        .collect();
    let run = |&(c, t): &(usize, u64)| run_cell_trial(&runnable[c], grid, t, &steps);
    let outcomes = execute(&tasks, parallelism, run)?;

    let mut summaries = Vec::new();
    let mut outcomes = outcomes.into_iter();
    for cell in runnable {
        let trial_results: Vec<Result<TrialFinals>> =
            outcomes.by_ref().take(grid.trials).collect();
        match summarize(cell, trial_results, &steps) {
            Ok(summary) => summaries.push(summary),
            Err(error) => failures.push(CellFailure { cell, error }),
        }
    }
    Ok(GridResult {
        cells: summaries,
        failures,
    })
}

#[cfg(feature = "parallel")]
fn execute<T, U, F>(tasks: &[T], parallelism: usize, f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    if parallelism == 1 {
        return Ok(tasks.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::config("parallelism", e.to_string()))?;
    Ok(pool.install(|| tasks.par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn execute<T, U, F>(tasks: &[T], _parallelism: usize, f: F) -> Result<Vec<U>>
where
    F: Fn(&T) -> U,
{
    Ok(tasks.iter().map(f).collect())
}

fn run_cell_trial(
    cell: &Cell,
    grid: &GridSpec,
    trial_index: u64,
    steps: &[usize],
) -> Result<TrialFinals> {
    let config = cell.trial_config(grid.horizon, grid.master_seed, trial_index);
    let mut sim = Simulation::new(&config)?;
    let mut metrics = Vec::with_capacity(steps.len());
    for &target in steps {
        while sim.step_count() < target {
            sim.advance()?;
        }
        metrics.push(sim.metrics());
    }
    Ok(TrialFinals {
        trial_index,
        metrics,
    })
}

fn summarize(
    cell: Cell,
    trial_results: Vec<Result<TrialFinals>>,
    steps: &[usize],
) -> Result<CellSummary> {
    let trials = trial_results.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(steps.len() * Metric::ALL.len());
    for (k, &step) in steps.iter().enumerate() {
        for metric in Metric::ALL {
            let values: Vec<f64> = trials.iter().map(|t| t.metrics[k].get(metric)).collect();
            let agg = metrics::aggregate(&values)?;
            rows.push(MetricRow {
                metric,
                step,
                mean: agg.mean,
                half_width: agg.half_width,
                trials: values.len(),
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    Ok(CellSummary { cell, rows, trials })
}
