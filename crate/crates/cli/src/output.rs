//! CSV writers and readers for traces and grid results.
//!
//! Floats are written with Rust's shortest round-trip formatting, which is
//! locale independent and always uses `.` as the decimal separator.

use std::io::{Read, Write};

use echoloop::engine::TrialTrace;
use echoloop::grid::{Cell, GridResult};
use echoloop::dynamics::MEAN_DELTA;
use echoloop::metrics;
use echoloop::{InterestModel, PolicyState};
use serde::Deserialize;

pub const TRACE_HEADER: [&str; 7] = [
    "t",
    "selection",
    "clicks",
    "delta",
    "loop_amplitude",
    "max_interest",
    "cumulative_reward",
];

pub const SNAPSHOT_HEADER: [&str; 8] = [
    "t",
    "item",
    "interest",
    "initial_interest",
    "alpha",
    "beta",
    "pulls",
    "rewards",
];

fn join<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values
        .into_iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per step: what was shown, what was clicked, and the observables after.
pub fn write_trace_csv<W: Write>(trace: &TrialTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.steps {
        w.write_record([
            r.step.to_string(),
            join(r.selection.items()),
            join(r.response.clicks().iter().map(|&c| u8::from(c))),
            r.delta.to_string(),
            r.metrics.loop_amplitude.to_string(),
            r.metrics.max_interest.to_string(),
            r.metrics.cumulative_reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Interest vectors and policy state at each snapshot, keyed by `(t, item)`.
pub fn write_snapshots_csv<W: Write>(trace: &TrialTrace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SNAPSHOT_HEADER)?;
    let initial = trace.initial_interests();
    for snap in &trace.snapshots {
        for (item, interest) in snap.interests.iter().enumerate() {
            let (alpha, beta, pulls, rewards) = match &snap.policy {
                PolicyState::Ts { alpha, beta } => (
                    alpha[item].to_string(),
                    beta[item].to_string(),
                    String::new(),
                    String::new(),
                ),
                PolicyState::Greedy { pulls, rewards, .. } => (
                    String::new(),
                    String::new(),
                    pulls[item].to_string(),
                    rewards[item].to_string(),
                ),
                _ => Default::default(),
            };
            w.write_record([
                snap.step.to_string(),
                item.to_string(),
                interest.to_string(),
                initial[item].to_string(),
                alpha,
                beta,
                pulls,
                rewards,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Cell coordinates shared by the results and finals files.
#[derive(Debug, Clone, PartialEq)]
pub struct CellColumns {
    pub item_count: usize,
    pub l: usize,
    pub policy: String,
    pub epsilon: Option<f64>,
    pub w: Option<f64>,
    pub q: Option<f64>,
    pub s: Option<f64>,
}

impl From<&Cell> for CellColumns {
    fn from(cell: &Cell) -> Self {
        let (w, q, s) = match cell.model {
            InterestModel::Basic => (None, None, None),
            InterestModel::AdditiveNoise { noise_width } => (Some(noise_width), None, None),
            InterestModel::Restarts {
                restart_probability,
                restart_scale,
            } => (None, Some(restart_probability), Some(restart_scale)),
        };
        CellColumns {
            item_count: cell.item_count,
            l: cell.select_count,
            policy: cell.policy.name().to_string(),
            epsilon: cell.policy.epsilon(),
            w,
            q,
            s,
        }
    }
}

impl std::fmt::Display for CellColumns {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M={} l={} policy={}", self.item_count, self.l, self.policy)?;
        for (name, value) in [("epsilon", self.epsilon), ("w", self.w), ("q", self.q), ("s", self.s)] {
            if let Some(v) = value {
                write!(f, " {name}={v}")?;
            }
        }
        Ok(())
    }
}

/// A row of the aggregated results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub cell: CellColumns,
    pub metric: String,
    pub step: usize,
    pub mean: f64,
    pub half_width: f64,
    pub trials: usize,
    pub restart_bound: Option<f64>,
    pub growth_ceiling: f64,
}

pub const RESULTS_HEADER: [&str; 14] = [
    "M",
    "l",
    "policy",
    "epsilon",
    "w",
    "q",
    "s",
    "metric",
    "step",
    "mean",
    "half_width",
    "trials",
    "restart_bound",
    "growth_ceiling",
];

pub const FINALS_HEADER: [&str; 13] = [
    "M",
    "l",
    "policy",
    "epsilon",
    "w",
    "q",
    "s",
    "trial",
    "step",
    "loop_amplitude",
    "max_interest",
    "cumulative_reward",
    "regret",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cell_fields(c: &CellColumns) -> [String; 7] {
    [
        c.item_count.to_string(),
        c.l.to_string(),
        c.policy.clone(),
        opt(c.epsilon),
        opt(c.w),
        opt(c.q),
        opt(c.s),
    ]
}

pub fn result_rows(result: &GridResult) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for summary in &result.cells {
        let cell = CellColumns::from(&summary.cell);
        let bound = summary.cell.restart_bound();
        for r in &summary.rows {
            rows.push(ResultRow {
                cell: cell.clone(),
                metric: r.metric.as_str().to_string(),
                step: r.step,
                mean: r.mean,
                half_width: r.half_width,
                trials: r.trials,
                restart_bound: bound,
                growth_ceiling: metrics::growth_ceiling(r.step, MEAN_DELTA, 1.0),
            });
        }
    }
    rows
}

/// One row per (cell, metric, recorded step).
pub fn write_results_csv<W: Write>(result: &GridResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for row in result_rows(result) {
        let mut fields: Vec<String> = cell_fields(&row.cell).into();
        fields.extend([
            row.metric,
            row.step.to_string(),
            row.mean.to_string(),
            row.half_width.to_string(),
            row.trials.to_string(),
            opt(row.restart_bound),
            row.growth_ceiling.to_string(),
        ]);
        w.write_record(fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-trial metric values at every recorded step.
pub fn write_finals_csv<W: Write>(result: &GridResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FINALS_HEADER)?;
    for summary in &result.cells {
        let cell = cell_fields(&CellColumns::from(&summary.cell));
        for trial in &summary.trials {
            for m in &trial.metrics {
                let mut fields: Vec<String> = cell.clone().into();
                fields.extend([
                    trial.trial_index.to_string(),
                    m.step.to_string(),
                    m.loop_amplitude.to_string(),
                    m.max_interest.to_string(),
                    m.cumulative_reward.to_string(),
                    m.regret.to_string(),
                ]);
                w.write_record(fields)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct RawResultRow {
    #[serde(rename = "M")]
    item_count: usize,
    l: usize,
    policy: String,
    epsilon: Option<f64>,
    w: Option<f64>,
    q: Option<f64>,
    s: Option<f64>,
    metric: String,
    step: usize,
    mean: f64,
    half_width: f64,
    trials: usize,
    restart_bound: Option<f64>,
    growth_ceiling: f64,
}

impl From<RawResultRow> for ResultRow {
    fn from(r: RawResultRow) -> Self {
        ResultRow {
            cell: CellColumns {
                item_count: r.item_count,
                l: r.l,
                policy: r.policy,
                epsilon: r.epsilon,
                w: r.w,
                q: r.q,
                s: r.s,
            },
            metric: r.metric,
            step: r.step,
            mean: r.mean,
            half_width: r.half_width,
            trials: r.trials,
            restart_bound: r.restart_bound,
            growth_ceiling: r.growth_ceiling,
        }
    }
}

/// Parse a results file written by [`write_results_csv`].
pub fn read_results_csv<R: Read>(input: R) -> csv::Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header: {}", headers.iter().collect::<Vec<_>>().join(",")),
        )));
    }
    r.deserialize::<RawResultRow>()
        .map(|row| row.map(ResultRow::from))
        .collect()
}
