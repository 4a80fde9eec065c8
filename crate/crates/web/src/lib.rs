//! Browser bindings for the echoloop simulator.
//!
//! Three operations back the demo page: a single trajectory, a policy
//! comparison with confidence bands, and a restart map over `(s, log q)`.
//! Each returns a plain object with `Vec<f64>` getters so the page can draw
//! straight from typed arrays. Errors come back as strings.

use echoloop::dynamics::MEAN_DELTA;
use echoloop::engine::{run_trial, TrialConfig, TrialTrace};
use echoloop::metrics::{aggregate, restart_bound};
use echoloop::{run_grid, GridSpec, InterestModel, Metric, ModelGrid, PolicyKind, PolicySpec};
use wasm_bindgen::prelude::*;

fn policy_spec(name: &str, epsilon: f64) -> Result<PolicySpec, String> {
    let spec = match name {
        "ts" => PolicySpec::Ts,
        "greedy" => PolicySpec::Greedy { epsilon },
        "optimal" => PolicySpec::Optimal,
        "random" => PolicySpec::Random,
        other => return Err(format!("unknown policy {other:?}")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn policy_kind(name: &str) -> Result<PolicyKind, String> {
    Ok(match name {
        "ts" => PolicyKind::Ts,
        "greedy" => PolicyKind::Greedy,
        "optimal" => PolicyKind::Optimal,
        "random" => PolicyKind::Random,
        other => return Err(format!("unknown policy {other:?}")),
    })
}

fn model(kind: &str, w: f64, q: f64, s: f64) -> Result<InterestModel, String> {
    let m = match kind {
        "basic" => InterestModel::Basic,
        "noise" => InterestModel::AdditiveNoise { noise_width: w },
        "restarts" => InterestModel::Restarts {
            restart_probability: q,
            restart_scale: s,
        },
        other => return Err(format!("unknown model {other:?}")),
    };
    m.validate().map_err(|e| e.to_string())?;
    Ok(m)
}

fn config(
    items: usize,
    shown: usize,
    horizon: usize,
    policy: PolicySpec,
    model: InterestModel,
    seed: u64,
    trial: u64,
) -> TrialConfig {
    TrialConfig {
        item_count: items,
        select_count: shown,
        horizon,
        policy,
        model,
        master_seed: seed,
        trial_index: trial,
        snapshot_every: horizon.max(1),
    }
}

fn run(cfg: &TrialConfig) -> Result<TrialTrace, String> {
    run_trial(cfg).map_err(|e| e.to_string())
}

/// Per-step curves of one trial.
#[wasm_bindgen]
pub struct Trajectory {
    amplitude: Vec<f64>,
    max_interest: Vec<f64>,
    reward: Vec<f64>,
    initial: Vec<f64>,
    last: Vec<f64>,
}

#[wasm_bindgen]
impl Trajectory {
    /// Loop amplitude for t = 0..=T.
    #[wasm_bindgen(getter)]
    pub fn amplitude(&self) -> Vec<f64> {
        self.amplitude.clone()
    }
    #[wasm_bindgen(getter, js_name = maxInterest)]
    pub fn max_interest(&self) -> Vec<f64> {
        self.max_interest.clone()
    }
    /// Cumulative clicks for t = 0..=T.
    #[wasm_bindgen(getter)]
    pub fn reward(&self) -> Vec<f64> {
        self.reward.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn initial(&self) -> Vec<f64> {
        self.initial.clone()
    }
    #[wasm_bindgen(getter, js_name = finalInterests)]
    pub fn final_interests(&self) -> Vec<f64> {
        self.last.clone()
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    policy: &str,
    epsilon: f64,
    model_kind: &str,
    w: f64,
    q: f64,
    s: f64,
    items: usize,
    shown: usize,
    horizon: usize,
    seed: u64,
) -> Result<Trajectory, String> {
    let cfg = config(
        items,
        shown,
        horizon,
        policy_spec(policy, epsilon)?,
        model(model_kind, w, q, s)?,
        seed,
        0,
    );
    let trace = run(&cfg)?;
    let metrics = std::iter::once(trace.initial_metrics).chain(trace.steps.iter().map(|r| r.metrics));
    let (mut amplitude, mut max_interest, mut reward) = (Vec::new(), Vec::new(), Vec::new());
    for m in metrics {
        amplitude.push(m.loop_amplitude);
        max_interest.push(m.max_interest);
        reward.push(m.cumulative_reward as f64);
    }
    Ok(Trajectory {
        amplitude,
        max_interest,
        reward,
        initial: trace.initial_interests().to_vec(),
        last: trace.snapshots.last().map(|s| s.interests.clone()).unwrap_or_default(),
    })
}

/// Mean loop amplitude per policy with 95% bands, sampled every `stride` steps.
#[wasm_bindgen]
pub struct Comparison {
    names: Vec<String>,
    steps: Vec<f64>,
    mean: Vec<Vec<f64>>,
    half_width: Vec<Vec<f64>>,
}

#[wasm_bindgen]
impl Comparison {
    #[wasm_bindgen(getter)]
    pub fn names(&self) -> Vec<String> {
        self.names.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> Vec<f64> {
        self.steps.clone()
    }
    pub fn mean(&self, policy: usize) -> Vec<f64> {
        self.mean.get(policy).cloned().unwrap_or_default()
    }
    #[wasm_bindgen(js_name = halfWidth)]
    pub fn half_width(&self, policy: usize) -> Vec<f64> {
        self.half_width.get(policy).cloned().unwrap_or_default()
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn compare_policies(
    w: f64,
    epsilon: f64,
    items: usize,
    shown: usize,
    horizon: usize,
    trials: usize,
    stride: usize,
    seed: u64,
) -> Result<Comparison, String> {
    if trials == 0 {
        return Err("trials must be at least 1".into());
    }
    let stride = stride.max(1);
    let steps: Vec<usize> = (0..=horizon).step_by(stride).collect();
    let noise = model("noise", w, 0.0, 0.0)?;
    let mut out = Comparison {
        names: Vec::new(),
        steps: steps.iter().map(|&t| t as f64).collect(),
        mean: Vec::new(),
        half_width: Vec::new(),
    };
    for name in ["random", "greedy", "ts", "optimal"] {
        let spec = policy_spec(name, epsilon)?;
        let traces = (0..trials as u64)
            .map(|i| run(&config(items, shown, horizon, spec, noise, seed, i)))
            .collect::<Result<Vec<_>, _>>()?;
        let (mut mean, mut hw) = (Vec::new(), Vec::new());
        for &t in &steps {
            let values: Vec<f64> = traces
                .iter()
                .map(|tr| tr.metrics_at(t).map_or(0.0, |m| m.loop_amplitude))
                .collect();
            let agg = aggregate(&values).map_err(|e| e.to_string())?;
            mean.push(agg.mean);
            hw.push(agg.half_width);
        }
        out.names.push(name.to_string());
        out.mean.push(mean);
        out.half_width.push(hw);
    }
    Ok(out)
}

/// Final mean max interest over a `(s, q)` grid, with the steady-state bound per cell.
/// Values are row-major: one row per `s`, one column per `q`.
#[wasm_bindgen]
pub struct RestartMap {
    q: Vec<f64>,
    s: Vec<f64>,
    observed: Vec<f64>,
    bound: Vec<f64>,
}

#[wasm_bindgen]
impl RestartMap {
    #[wasm_bindgen(getter)]
    pub fn q(&self) -> Vec<f64> {
        self.q.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn s(&self) -> Vec<f64> {
        self.s.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn observed(&self) -> Vec<f64> {
        self.observed.clone()
    }
    /// Vacuous bounds come back as `f64::MAX`.
    #[wasm_bindgen(getter)]
    pub fn bound(&self) -> Vec<f64> {
        self.bound.clone()
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn restart_map(
    policy: &str,
    epsilon: f64,
    items: usize,
    shown: usize,
    horizon: usize,
    trials: usize,
    q_points: usize,
    seed: u64,
) -> Result<RestartMap, String> {
    let q_points = q_points.max(2);
    let q: Vec<f64> = (0..q_points)
        .map(|k| 10f64.powf(-3.0 + 3.0 * k as f64 / (q_points - 1) as f64))
        .collect();
    let s = vec![0.0, 0.25, 0.5, 0.75];
    let kind = policy_kind(policy)?;
    let spec = GridSpec {
        item_counts: vec![items],
        select_counts: vec![shown],
        policies: vec![kind],
        epsilons: if kind == PolicyKind::Greedy { vec![epsilon] } else { vec![] },
        model: ModelGrid::Restarts {
            restart_probabilities: q.clone(),
            restart_scales: s.clone(),
        },
        trials,
        horizon,
        master_seed: seed,
        checkpoints: vec![],
    };
    let result = run_grid(&spec, 1).map_err(|e| e.to_string())?;
    if let Some(f) = result.failures.first() {
        return Err(format!("{}: {}", f.cell, f.error));
    }
    let (mut observed, mut bound) = (Vec::new(), Vec::new());
    for &sv in &s {
        for &qv in &q {
            let cell = result
                .find(|c| {
                    c.model
                        == InterestModel::Restarts {
                            restart_probability: qv,
                            restart_scale: sv,
                        }
                })
                .ok_or("missing cell")?;
            let row = cell.row(Metric::MaxInterest, horizon).ok_or("missing row")?;
            observed.push(row.mean);
            let b = restart_bound(qv, sv, MEAN_DELTA).map_err(|e| e.to_string())?;
            bound.push(if b.is_finite() { b } else { f64::MAX });
        }
    }
    Ok(RestartMap { q, s, observed, bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_has_one_point_per_step() {
        let t = simulate("ts", 0.0, "noise", 1.0, 0.0, 0.0, 6, 2, 120, 3).unwrap();
        assert_eq!(t.amplitude().len(), 121);
        assert_eq!(t.amplitude()[0], 0.0);
        assert_eq!(t.reward()[0], 0.0);
        assert!(t.reward().windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(t.initial().len(), 6);
        assert_eq!(t.final_interests().len(), 6);
    }

    #[test]
    fn trajectory_rejects_bad_input() {
        assert!(simulate("ts", 0.0, "basic", 0.0, 0.0, 0.0, 3, 3, 10, 1).is_err());
        assert!(simulate("nope", 0.0, "basic", 0.0, 0.0, 0.0, 3, 1, 10, 1).is_err());
        assert!(simulate("greedy", 2.0, "basic", 0.0, 0.0, 0.0, 3, 1, 10, 1).is_err());
        assert!(simulate("ts", 0.0, "restarts", 0.0, 1.5, 0.0, 3, 1, 10, 1).is_err());
    }

    #[test]
    fn comparison_shapes() {
        let c = compare_policies(3.0, 0.1, 10, 5, 200, 4, 50, 7).unwrap();
        assert_eq!(c.names(), vec!["random", "greedy", "ts", "optimal"]);
        assert_eq!(c.steps(), vec![0.0, 50.0, 100.0, 150.0, 200.0]);
        for i in 0..4 {
            assert_eq!(c.mean(i).len(), 5);
            assert_eq!(c.mean(i)[0], 0.0);
            assert!(c.half_width(i).iter().all(|&h| h >= 0.0));
        }
        assert!(c.mean(9).is_empty());
    }

    #[test]
    fn restart_map_shapes_and_bounds() {
        let m = restart_map("optimal", 0.1, 6, 2, 100, 2, 4, 1).unwrap();
        assert_eq!(m.q().len(), 4);
        assert!((m.q()[0] - 1e-3).abs() < 1e-15 && m.q()[3] == 1.0);
        assert_eq!(m.observed().len(), 16);
        // q = 1, s = 0 has no headroom
        assert_eq!(m.bound()[3], 0.0);
        assert!(m.bound().iter().all(|b| b.is_finite()));
    }
}
