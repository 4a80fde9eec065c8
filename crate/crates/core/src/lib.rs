//! Seeded simulator of hidden feedback loops in a single-user bandit
//! recommender.
//!
//! A user holds a real-valued interest per item and clicks a shown item with
//! probability `σ(interest)`. Clicks push the interest up, skips push it down,
//! so a policy that keeps showing the same items can drive interests away from
//! where they started without bound. The crate provides:
//!
//! - [`dynamics`]: the user model, with additive perception noise and
//!   interest restarts as optional variants
//! - [`policies`]: Thompson Sampling, ε-greedy, Optimal and Random selection
//! - [`engine`]: the per-step loop, traces and a constant-selection detector
//! - [`metrics`]: loop amplitude, max interest, reward/regret, reference ceilings
//! - [`grid`]: reproducible parameter sweeps with confidence intervals
//!
//! All randomness in a trial comes from one ChaCha stream seeded by
//! [`seed::derive_seed`], so any run can be replayed exactly.

pub mod dynamics;
pub mod engine;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod policies;
pub mod seed;

pub use dynamics::{sigmoid, InterestModel, InterestState, Response, Selection};
pub use engine::{
    detect_constant_best_levers, run_trial, run_trial_from, Simulation, StabilityReport,
    StepRecord, TrialConfig, TrialTrace,
};
pub use error::{Error, Result};
pub use grid::{run_grid, Cell, CellSummary, GridResult, GridSpec, ModelGrid, PolicyKind};
pub use metrics::{Aggregate, Metric, MetricSnapshot};
pub use policies::{PolicySpec, PolicyState};
