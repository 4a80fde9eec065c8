//! Lever-selection policies and their learning state.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::dynamics::{Response, Selection};
use crate::error::{Error, Result};

/// Which policy to run, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Thompson Sampling with Beta(1, 1) priors.
    Ts,
    /// ε-greedy over empirical click rates.
    Greedy { epsilon: f64 },
    /// Knows the true mean interests and shows the top `l`.
    Optimal,
    /// Uniform choice of `l` items without replacement.
    Random,
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Ts => "ts",
            PolicySpec::Greedy { .. } => "greedy",
            PolicySpec::Optimal => "optimal",
            PolicySpec::Random => "random",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            PolicySpec::Greedy { epsilon } => Some(epsilon),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicySpec::Greedy { epsilon } if !(0.0..=1.0).contains(&epsilon) => Err(
                Error::config("epsilon", format!("must lie in [0, 1], got {epsilon}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Per-policy learning state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyState {
    Ts {
        alpha: Vec<f64>,
        beta: Vec<f64>,
    },
    Greedy {
        epsilon: f64,
        pulls: Vec<u64>,
        rewards: Vec<u64>,
    },
    Optimal {
        interest_view: Vec<f64>,
    },
    Random {
        item_count: usize,
    },
}

impl PolicyState {
    /// Fresh state for `spec`. The Optimal policy starts out seeing
    /// `initial_interests`; the other policies only use its length.
    pub fn new(spec: &PolicySpec, initial_interests: &[f64]) -> Result<Self> {
        spec.validate()?;
        let item_count = initial_interests.len();
        if item_count == 0 {
            return Err(Error::config("item_count", "must be at least 1"));
        }
        Ok(match *spec {
            PolicySpec::Ts => PolicyState::Ts {
                alpha: vec![1.0; item_count],
                beta: vec![1.0; item_count],
            },
            PolicySpec::Greedy { epsilon } => PolicyState::Greedy {
                epsilon,
                pulls: vec![0; item_count],
                rewards: vec![0; item_count],
            },
            PolicySpec::Optimal => PolicyState::Optimal {
                interest_view: initial_interests.to_vec(),
            },
            PolicySpec::Random => PolicyState::Random { item_count },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyState::Ts { .. } => "ts",
            PolicyState::Greedy { .. } => "greedy",
            PolicyState::Optimal { .. } => "optimal",
            PolicyState::Random { .. } => "random",
        }
    }

    pub fn item_count(&self) -> usize {
        match self {
            PolicyState::Ts { alpha, .. } => alpha.len(),
            PolicyState::Greedy { pulls, .. } => pulls.len(),
            PolicyState::Optimal { interest_view } => interest_view.len(),
            PolicyState::Random { item_count } => *item_count,
        }
    }

    /// Choose `select_count` distinct items. Requires `1 <= select_count < M`.
    pub fn select<R: Rng + ?Sized>(&self, select_count: usize, rng: &mut R) -> Result<Selection> {
        let item_count = self.item_count();
        check_select_count(select_count, item_count)?;
        let items = match self {
            PolicyState::Ts { alpha, beta } => {
                let mut draws = Vec::with_capacity(item_count);
                for (&a, &b) in alpha.iter().zip(beta) {
                    let dist = Beta::new(a, b).map_err(|e| {
                        Error::InvalidSelection(format!("bad posterior Beta({a}, {b}): {e}"))
                    })?;
                    draws.push(dist.sample(rng));
                }
                top_indices(&draws, select_count)
            }
            PolicyState::Greedy {
                epsilon,
                pulls,
                rewards,
            } => {
                if rng.random::<f64>() < *epsilon {
                    uniform_subset(item_count, select_count, rng)
                } else {
                    let means: Vec<f64> = pulls
                        .iter()
                        .zip(rewards)
                        .map(|(&n, &d)| if n == 0 { 0.0 } else { d as f64 / n as f64 })
                        .collect();
                    top_indices(&means, select_count)
                }
            }
            PolicyState::Optimal { interest_view } => top_indices(interest_view, select_count),
            PolicyState::Random { .. } => uniform_subset(item_count, select_count, rng),
        };
        Selection::new(items, item_count)
    }

    /// Fold one step of feedback into the learning state.
    pub fn update(&mut self, selection: &Selection, response: &Response) -> Result<()> {
        if selection.len() != response.len() {
            return Err(Error::Misaligned {
                selection: selection.len(),
                response: response.len(),
            });
        }
        if selection.items().iter().any(|&i| i >= self.item_count()) {
            return Err(Error::InvalidSelection(format!(
                "selection out of range for {} items",
                self.item_count()
            )));
        }
        let shown = selection.items().iter().zip(response.clicks());
        match self {
            PolicyState::Ts { alpha, beta } => {
                for (&i, &clicked) in shown {
                    if clicked {
                        alpha[i] += 1.0;
                    } else {
                        beta[i] += 1.0;
                    }
                }
            }
            PolicyState::Greedy { pulls, rewards, .. } => {
                for (&i, &clicked) in shown {
                    pulls[i] += 1;
                    rewards[i] += u64::from(clicked);
                }
            }
            PolicyState::Optimal { .. } | PolicyState::Random { .. } => {}
        }
        Ok(())
    }

    /// Refresh the Optimal policy's view of the true mean interests.
    pub fn observe_interests(&mut self, interests: &[f64]) -> Result<()> {
        match self {
            PolicyState::Optimal { interest_view } => {
                if interests.len() != interest_view.len() {
                    return Err(Error::config(
                        "interests",
                        format!(
                            "expected {} values, got {}",
                            interest_view.len(),
                            interests.len()
                        ),
                    ));
                }
                interest_view.copy_from_slice(interests);
                Ok(())
            }
            other => Err(Error::UnsupportedOperation {
                operation: "observe_interests",
                policy: other.name(),
            }),
        }
    }
}

pub(crate) fn check_select_count(select_count: usize, item_count: usize) -> Result<()> {
    if select_count == 0 || select_count >= item_count {
        return Err(Error::config(
            "select_count",
            format!("must satisfy 1 <= l < M (l = {select_count}, M = {item_count})"),
        ));
    }
    Ok(())
}

/// Indices of the `count` largest scores, ties going to the lower index.
pub fn top_indices(scores: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(count);
    order
}

fn uniform_subset<R: Rng + ?Sized>(item_count: usize, count: usize, rng: &mut R) -> Vec<usize> {
    index::sample(rng, item_count, count).into_vec()
}
