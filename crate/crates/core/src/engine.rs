//! Single-trial simulation: the step loop wiring a policy to the user model,
//! trace recording and the constant-best-levers detector.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, InterestModel, InterestState, Response, Selection};
use crate::error::{Error, Result};
use crate::metrics::MetricSnapshot;
use crate::policies::{check_select_count, PolicySpec, PolicyState};
use crate::seed;

/// Random stream owned by one trial.
pub type TrialRng = ChaCha12Rng;

pub const DEFAULT_SNAPSHOT_EVERY: usize = 50;

fn default_snapshot_every() -> usize {
    DEFAULT_SNAPSHOT_EVERY
}

/// Full parameterization of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub item_count: usize,
    pub select_count: usize,
    pub horizon: usize,
    pub policy: PolicySpec,
    pub model: InterestModel,
    #[serde(rename = "seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub trial_index: u64,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.item_count == 0 {
            return Err(Error::config("item_count", "must be at least 1"));
        }
        check_select_count(self.select_count, self.item_count)?;
        if self.snapshot_every == 0 {
            return Err(Error::config("snapshot_every", "must be at least 1"));
        }
        self.policy.validate()?;
        self.model.validate()
    }

    /// Identity of the parameter cell this trial belongs to. The horizon, seed
    /// and trial index are excluded, so a longer run of the same cell replays
    /// a shorter one as its prefix.
    pub fn cell_id(&self) -> u64 {
        cell_id(self.item_count, self.select_count, &self.policy, &self.model)
    }

    /// Seed of this trial's random stream.
    pub fn stream_seed(&self) -> u64 {
        seed::derive_seed(self.master_seed, self.cell_id(), self.trial_index)
    }
}

/// Hash of the canonical text form of a parameter cell.
///
/// A restart model that can never fire (`q == 0` or `s == 1`) is the basic
/// model and shares its id, so both replay the same trials.
pub fn cell_id(
    item_count: usize,
    select_count: usize,
    policy: &PolicySpec,
    model: &InterestModel,
) -> u64 {
    let model = match model {
        InterestModel::Restarts { .. } if model.effective_restarts().is_none() => {
            &InterestModel::Basic
        }
        other => other,
    };
    let mut key = format!("M={item_count};l={select_count};policy={}", policy.name());
    if let Some(eps) = policy.epsilon() {
        key.push_str(&format!(";epsilon={:016x}", eps.to_bits()));
    }
    key.push_str(&format!(";model={}", model.name()));
    match *model {
        InterestModel::Basic => {}
        InterestModel::AdditiveNoise { noise_width } => {
            key.push_str(&format!(";w={:016x}", noise_width.to_bits()));
        }
        InterestModel::Restarts {
            restart_probability,
            restart_scale,
        } => {
            key.push_str(&format!(
                ";q={:016x};s={:016x}",
                restart_probability.to_bits(),
                restart_scale.to_bits()
            ));
        }
    }
    seed::fnv1a(key.as_bytes())
}

/// What happened in one step and the observables right after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step number; `metrics` describe the state after this step.
    pub step: usize,
    pub selection: Selection,
    pub response: Response,
    pub delta: f64,
    pub metrics: MetricSnapshot,
}

/// Full interest vector and policy state at a given step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub interests: Vec<f64>,
    pub policy: PolicyState,
}

/// A live trial that can be advanced one step at a time.
#[derive(Debug, Clone)]
pub struct Simulation {
    select_count: usize,
    model: InterestModel,
    state: InterestState,
    policy: PolicyState,
    rng: TrialRng,
    step: usize,
    cumulative_reward: u64,
}

impl Simulation {
    /// Seed the trial's stream and draw the initial interests from it.
    pub fn new(config: &TrialConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = TrialRng::seed_from_u64(config.stream_seed());
        let state = InterestState::init(config.item_count, &mut rng)?;
        Self::with_state(config, state, rng)
    }

    /// Start from given initial interests instead of drawing them.
    pub fn from_initial(config: &TrialConfig, initial: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if initial.len() != config.item_count {
            return Err(Error::config(
                "item_count",
                format!("{} initial interests given for M = {}", initial.len(), config.item_count),
            ));
        }
        let rng = TrialRng::seed_from_u64(config.stream_seed());
        Self::with_state(config, InterestState::from_initial(initial)?, rng)
    }

    fn with_state(config: &TrialConfig, state: InterestState, rng: TrialRng) -> Result<Self> {
        let policy = PolicyState::new(&config.policy, state.initial())?;
        Ok(Simulation {
            select_count: config.select_count,
            model: config.model,
            state,
            policy,
            rng,
            step: 0,
            cumulative_reward: 0,
        })
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn state(&self) -> &InterestState {
        &self.state
    }

    pub fn policy(&self) -> &PolicyState {
        &self.policy
    }

    pub fn metrics(&self) -> MetricSnapshot {
        MetricSnapshot::capture(self.step, &self.state, self.cumulative_reward, self.select_count)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            step: self.step,
            interests: self.state.mean().to_vec(),
            policy: self.policy.clone(),
        }
    }

    /// Run one step: draw δ, select, perceive, respond, update the policy,
    /// move the interests, then let the Optimal policy see the new interests.
    pub fn advance(&mut self) -> Result<StepRecord> {
        let rng = &mut self.rng;
        let delta = dynamics::sample_delta(rng);
        let selection = self.policy.select(self.select_count, rng)?;
        let perceived = dynamics::perceive(&self.state, &selection, &self.model, rng);
        let response = dynamics::sample_response(&perceived, rng);
        self.policy.update(&selection, &response)?;
        self.state
            .step(&selection, &response, delta, &self.model, rng)?;
        if let PolicyState::Optimal { .. } = self.policy {
            self.policy.observe_interests(self.state.mean())?;
        }
        self.step += 1;
        self.cumulative_reward += response.click_count() as u64;
        Ok(StepRecord {
            step: self.step,
            selection,
            response,
            delta,
            metrics: self.metrics(),
        })
    }
}

/// Record of a complete trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub config: TrialConfig,
    pub stream_seed: u64,
    pub initial_metrics: MetricSnapshot,
    /// One record per step, `steps[t - 1]` for step `t`.
    pub steps: Vec<StepRecord>,
    /// Taken at step 0, every `snapshot_every` steps, and at the horizon.
    pub snapshots: Vec<Snapshot>,
}

impl TrialTrace {
    pub fn initial_interests(&self) -> &[f64] {
        &self.snapshots[0].interests
    }

    /// Observables after `step` steps (`0` is the initial state).
    pub fn metrics_at(&self, step: usize) -> Option<MetricSnapshot> {
        match step {
            0 => Some(self.initial_metrics),
            t => self.steps.get(t - 1).map(|r| r.metrics),
        }
    }

    pub fn final_metrics(&self) -> MetricSnapshot {
        self.steps
            .last()
            .map_or(self.initial_metrics, |r| r.metrics)
    }

    pub fn selections(&self) -> impl Iterator<Item = &Selection> {
        self.steps.iter().map(|r| &r.selection)
    }

    pub fn constant_best_levers(&self, from_step: usize) -> StabilityReport {
        let selections: Vec<&Selection> = self.selections().collect();
        detect_constant_best_levers(&selections, from_step)
    }
}

/// Run a whole trial and keep its trace.
pub fn run_trial(config: &TrialConfig) -> Result<TrialTrace> {
    let sim = Simulation::new(config)?;
    record(config, sim)
}

/// Like [`run_trial`] with caller-chosen initial interests.
pub fn run_trial_from(config: &TrialConfig, initial: Vec<f64>) -> Result<TrialTrace> {
    let sim = Simulation::from_initial(config, initial)?;
    record(config, sim)
}

fn record(config: &TrialConfig, mut sim: Simulation) -> Result<TrialTrace> {
    let mut steps = Vec::with_capacity(config.horizon);
    let mut snapshots = vec![sim.snapshot()];
    let initial_metrics = sim.metrics();
    for t in 1..=config.horizon {
        steps.push(sim.advance()?);
        if t % config.snapshot_every == 0 || t == config.horizon {
            snapshots.push(sim.snapshot());
        }
    }
    Ok(TrialTrace {
        config: config.clone(),
        stream_seed: config.stream_seed(),
        initial_metrics,
        steps,
        snapshots,
    })
}

/// Whether the selected set stopped changing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Every selection after `from_step` equals the one made at `from_step`.
    pub stabilized: bool,
    /// Smallest `t0 >= from_step` after which the selection never changes,
    /// `None` if it still changes at the last step.
    pub stabilization_step: Option<usize>,
    /// Fraction of steps in `(from_step, T]` whose selection equals the one at `from_step`.
    pub stable_fraction: f64,
}

/// `selections[t - 1]` is the set chosen at step `t`. `from_step` is clamped
/// to `[1, T]`.
pub fn detect_constant_best_levers<S: std::borrow::Borrow<Selection>>(
    selections: &[S],
    from_step: usize,
) -> StabilityReport {
    let horizon = selections.len();
    if horizon == 0 {
        return StabilityReport {
            stabilized: false,
            stabilization_step: None,
            stable_fraction: 0.0,
        };
    }
    let from = from_step.clamp(1, horizon);
    let at = |t: usize| selections[t - 1].borrow();
    let reference = at(from);

    let tail = horizon - from;
    let matching = (from + 1..=horizon).filter(|&t| at(t) == reference).count();
    let stable_fraction = if tail == 0 {
        1.0
    } else {
        matching as f64 / tail as f64
    };

    let last_change = (from + 1..=horizon).rev().find(|&t| at(t) != at(t - 1));
    let t0 = last_change.unwrap_or(from);
    StabilityReport {
        stabilized: last_change.is_none(),
        stabilization_step: (t0 < horizon || last_change.is_none()).then_some(t0),
        stable_fraction,
    }
}
