//! Observables tracked per step and the closed-form reference levels they are
//! compared against.

use serde::{Deserialize, Serialize};

use crate::dynamics::InterestState;
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile used for confidence half-widths.
pub const Z_95: f64 = 1.96;

/// Metric identifiers, used verbatim as CSV values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    LoopAmplitude,
    MaxInterest,
    CumulativeReward,
    Regret,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::LoopAmplitude,
        Metric::MaxInterest,
        Metric::CumulativeReward,
        Metric::Regret,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::LoopAmplitude => "loop_amplitude",
            Metric::MaxInterest => "max_interest",
            Metric::CumulativeReward => "cumulative_reward",
            Metric::Regret => "regret",
        }
    }

    pub fn parse(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.as_str() == name)
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar observables after `step` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub step: usize,
    pub loop_amplitude: f64,
    pub max_interest: f64,
    pub cumulative_reward: u64,
    pub regret: i64,
}

impl MetricSnapshot {
    pub fn capture(
        step: usize,
        state: &InterestState,
        cumulative_reward: u64,
        select_count: usize,
    ) -> Self {
        MetricSnapshot {
            step,
            loop_amplitude: loop_amplitude(state),
            max_interest: max_interest(state),
            cumulative_reward,
            regret: (step * select_count) as i64 - cumulative_reward as i64,
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::LoopAmplitude => self.loop_amplitude,
            Metric::MaxInterest => self.max_interest,
            Metric::CumulativeReward => self.cumulative_reward as f64,
            Metric::Regret => self.regret as f64,
        }
    }
}

/// Euclidean distance between the current and the initial interests.
pub fn loop_amplitude(state: &InterestState) -> f64 {
    state
        .mean()
        .iter()
        .zip(state.initial())
        .map(|(m, m0)| (m - m0) * (m - m0))
        .sum::<f64>()
        .sqrt()
}

pub fn max_interest(state: &InterestState) -> f64 {
    state
        .mean()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Steady-state ceiling on expected interest under restarts,
/// `E δ · (1 / ((1 - s) q) - 1)`.
///
/// Infinite when no restart can pull interest back (`q == 0` or `s == 1`).
pub fn restart_bound(
    restart_probability: f64,
    restart_scale: f64,
    delta_mean: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&restart_probability) {
        return Err(Error::config(
            "restart_probability",
            format!("must lie in [0, 1], got {restart_probability}"),
        ));
    }
    if !(0.0..=1.0).contains(&restart_scale) {
        return Err(Error::config(
            "restart_scale",
            format!("must lie in [0, 1], got {restart_scale}"),
        ));
    }
    if !(delta_mean.is_finite() && delta_mean > 0.0) {
        return Err(Error::config(
            "delta_mean",
            format!("must be positive, got {delta_mean}"),
        ));
    }
    if restart_probability == 0.0 || restart_scale == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(delta_mean * (1.0 / ((1.0 - restart_scale) * restart_probability) - 1.0))
}

/// Expected interest reachable after `steps` steps from `initial_max`
/// when every step adds `delta_mean` on average.
pub fn growth_ceiling(steps: usize, delta_mean: f64, initial_max: f64) -> f64 {
    initial_max + steps as f64 * delta_mean
}

/// Sample mean and 95% normal-approximation confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub half_width: f64,
}

impl Aggregate {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    pub fn overlaps(&self, other: &Aggregate) -> bool {
        self.lower() <= other.upper() && other.lower() <= self.upper()
    }
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate> {
    if values.is_empty() {
        return Err(Error::Empty("aggregate needs at least one value"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok(Aggregate {
            mean,
            half_width: 0.0,
        });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Aggregate {
        mean,
        half_width: Z_95 * var.sqrt() / n.sqrt(),
    })
}

/// Outcome of comparing an observed mean interest against its reference ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundCheck {
    Satisfied,
    Violated,
    /// The observed interest has not left the initial range `[-1, 1]`, so the
    /// growth ceiling says nothing about it.
    NotApplicable,
}

/// Check `mean <= min(restart_bound, growth_ceiling) + 2 · half_width`,
/// only where the mean exceeds the initial interest range.
pub fn check_bound(
    observed: Aggregate,
    restart_bound: Option<f64>,
    growth_ceiling: f64,
) -> BoundCheck {
    if observed.mean <= 1.0 {
        return BoundCheck::NotApplicable;
    }
    let ceiling = restart_bound.map_or(growth_ceiling, |b| b.min(growth_ceiling));
    if observed.mean <= ceiling + 2.0 * observed.half_width {
        BoundCheck::Satisfied
    } else {
        BoundCheck::Violated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn amplitude_examples() {
        let s = InterestState::from_initial(vec![0.3, -0.2]).unwrap();
        assert_eq!(loop_amplitude(&s), 0.0);
        let s = InterestState::from_parts(vec![0.0, 0.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(loop_amplitude(&s), 5.0);
        assert_eq!(max_interest(&s), 4.0);
    }

    #[test]
    fn restart_bound_examples() {
        assert!((restart_bound(0.1, 0.5, 0.005).unwrap() - 0.095).abs() < 1e-12);
        assert_eq!(restart_bound(1.0, 0.0, 0.005).unwrap(), 0.0);
        assert_eq!(restart_bound(0.3, 1.0, 0.005).unwrap(), f64::INFINITY);
        assert_eq!(restart_bound(0.0, 0.5, 0.005).unwrap(), f64::INFINITY);
    }

    #[test]
    fn restart_bound_rejects_out_of_range() {
        assert!(restart_bound(-0.1, 0.5, 0.005).is_err());
        assert!(restart_bound(1.1, 0.5, 0.005).is_err());
        assert!(restart_bound(0.5, -0.1, 0.005).is_err());
        assert!(restart_bound(0.5, 1.1, 0.005).is_err());
        assert!(restart_bound(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn growth_ceiling_examples() {
        assert_eq!(growth_ceiling(0, 0.005, 1.0), 1.0);
        assert!((growth_ceiling(5000, 0.005, 1.0) - 26.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(
            aggregate(&[5.0]).unwrap(),
            Aggregate { mean: 5.0, half_width: 0.0 }
        );
        assert_eq!(
            aggregate(&[1.0; 4]).unwrap(),
            Aggregate { mean: 1.0, half_width: 0.0 }
        );
        let a = aggregate(&[0.0, 2.0]).unwrap();
        assert_eq!(a.mean, 1.0);
        assert!((a.half_width - 1.96).abs() < 1e-12);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn bound_check_cases() {
        let inside = Aggregate { mean: 0.8, half_width: 0.1 };
        assert_eq!(check_bound(inside, Some(0.0), 26.0), BoundCheck::NotApplicable);
        let ok = Aggregate { mean: 4.0, half_width: 0.5 };
        assert_eq!(check_bound(ok, Some(4.5), 26.0), BoundCheck::Satisfied);
        assert_eq!(check_bound(ok, Some(3.5), 26.0), BoundCheck::Satisfied);
        assert_eq!(check_bound(ok, Some(2.5), 26.0), BoundCheck::Violated);
        assert_eq!(check_bound(ok, None, 2.0), BoundCheck::Violated);
        assert_eq!(check_bound(ok, Some(f64::INFINITY), 26.0), BoundCheck::Satisfied);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(Metric::parse(m.as_str()), Some(m));
        }
        assert_eq!(Metric::parse("coverage"), None);
    }

    proptest! {
        #[test]
        fn restart_bound_monotone(
            q1 in 0.001..1.0f64, q2 in 0.001..1.0f64,
            s1 in 0.0..0.999f64, s2 in 0.0..0.999f64,
        ) {
            let (qlo, qhi) = if q1 < q2 { (q1, q2) } else { (q2, q1) };
            prop_assume!(qhi - qlo > 1e-9);
            prop_assert!(restart_bound(qlo, s1, 0.005).unwrap() > restart_bound(qhi, s1, 0.005).unwrap());
            let (slo, shi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            prop_assume!(shi - slo > 1e-9);
            prop_assert!(restart_bound(q1, slo, 0.005).unwrap() < restart_bound(q1, shi, 0.005).unwrap());
        }

        #[test]
        fn aggregate_permutation_and_scale(
            values in prop::collection::vec(-100.0..100.0f64, 1..40),
            c in -10.0..10.0f64,
            rot in 0usize..40,
        ) {
            let base = aggregate(&values).unwrap();
            let mut rotated = values.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            let perm = aggregate(&rotated).unwrap();
            prop_assert!((perm.mean - base.mean).abs() <= 1e-9 * (1.0 + base.mean.abs()));
            prop_assert!((perm.half_width - base.half_width).abs() <= 1e-9 * (1.0 + base.half_width));
            let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
            let sc = aggregate(&scaled).unwrap();
            prop_assert!((sc.mean - c * base.mean).abs() <= 1e-9 * (1.0 + (c * base.mean).abs()));
            prop_assert!((sc.half_width - c.abs() * base.half_width).abs() <= 1e-9 * (1.0 + c.abs() * base.half_width));
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(base.mean >= lo - 1e-9 && base.mean <= hi + 1e-9);
        }
    }
}
