//! User model: initial interests, click sampling through the logistic link,
//! and the three interest-evolution rules.
//!
//! Every stochastic function takes the trial's random stream explicitly. The
//! engine calls them in a fixed order per step:
//!
//! 1. `sample_delta`
//! 2. policy draws (`PolicyState::select`)
//! 3. `perceive`, one noise draw per shown item in selection order
//! 4. `sample_response`, one uniform per shown item in selection order
//! 5. `InterestState::step`, which for the restart model draws a coin per item
//!    in index order plus one replacement value per restart event
//!
//! Restart draws are skipped entirely when restarts cannot change anything
//! (`q == 0` or `s == 1`), so those configurations replay the basic model
//! bit for bit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper end of the per-step interest change `δ ~ Uniform[0, MAX_DELTA]`.
pub const MAX_DELTA: f64 = 0.01;

/// Expected per-step interest change, `E δ`.
pub const MEAN_DELTA: f64 = MAX_DELTA / 2.0;

/// Logistic link `1 / (1 + e^-x)`, evaluated without overflow for any finite `x`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Draw a fresh interest value from the initial distribution, Uniform[-1, 1].
pub fn sample_initial_interest<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..=1.0)
}

/// One `δ_t` for the whole step, shared by every shown item.
pub fn sample_delta<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..=MAX_DELTA)
}

/// How user interests evolve between steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InterestModel {
    /// Shown items move by `±δ` depending on the click; nothing else changes.
    Basic,
    /// Clicks are sampled from `mean + ω` with `ω ~ Uniform[-w, w]`;
    /// the drift still applies to the mean.
    AdditiveNoise { noise_width: f64 },
    /// After the basic increment each item restarts with probability `q`,
    /// becoming `(1 - s) ν + s (μ + Δ)` with a fresh `ν ~ Uniform[-1, 1]`.
    Restarts {
        restart_probability: f64,
        restart_scale: f64,
    },
}

impl InterestModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InterestModel::Basic => Ok(()),
            InterestModel::AdditiveNoise { noise_width } => {
                if !(noise_width.is_finite() && noise_width >= 0.0) {
                    return Err(Error::config(
                        "noise_width",
                        format!("must be a finite value >= 0, got {noise_width}"),
                    ));
                }
                Ok(())
            }
            InterestModel::Restarts {
                restart_probability,
                restart_scale,
            } => {
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
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InterestModel::Basic => "basic",
            InterestModel::AdditiveNoise { .. } => "additive_noise",
            InterestModel::Restarts { .. } => "restarts",
        }
    }

    /// `(q, s)` when a restart can actually alter an interest.
    pub(crate) fn effective_restarts(&self) -> Option<(f64, f64)> {
        match *self {
            InterestModel::Restarts {
                restart_probability,
                restart_scale,
            } if restart_probability > 0.0 && restart_scale < 1.0 => {
                Some((restart_probability, restart_scale))
            }
            _ => None,
        }
    }
}

/// A set of distinct item indices shown in one step, stored in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selection(Vec<usize>);

impl Selection {
    pub fn new(mut items: Vec<usize>, item_count: usize) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidSelection("no items selected".into()));
        }
        items.sort_unstable();
        if let Some(&last) = items.last() {
            if last >= item_count {
                return Err(Error::InvalidSelection(format!(
                    "item {last} out of range for {item_count} items"
                )));
            }
        }
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSelection("duplicate item".into()));
        }
        Ok(Selection(items))
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }
}

/// Clicks aligned with a [`Selection`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response(Vec<bool>);

impl Response {
    pub fn new(clicks: Vec<bool>) -> Self {
        Response(clicks)
    }

    pub fn clicks(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn click_count(&self) -> usize {
        self.0.iter().filter(|&&c| c).count()
    }

    fn check_aligned(&self, selection: &Selection) -> Result<()> {
        if self.len() != selection.len() {
            return Err(Error::Misaligned {
                selection: selection.len(),
                response: self.len(),
            });
        }
        Ok(())
    }
}

/// Mean interest per item together with the frozen interests at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterestState {
    mean: Vec<f64>,
    initial: Vec<f64>,
}

impl InterestState {
    /// Draw `item_count` independent Uniform[-1, 1] initial interests.
    pub fn init<R: Rng + ?Sized>(item_count: usize, rng: &mut R) -> Result<Self> {
        if item_count == 0 {
            return Err(Error::config("item_count", "must be at least 1"));
        }
        let initial: Vec<f64> = (0..item_count)
            .map(|_| sample_initial_interest(rng))
            .collect();
        Ok(InterestState {
            mean: initial.clone(),
            initial,
        })
    }

    /// Start from explicit initial interests.
    pub fn from_initial(initial: Vec<f64>) -> Result<Self> {
        Self::from_parts(initial.clone(), initial)
    }

    /// Rebuild a state from its initial and current interests.
    pub fn from_parts(initial: Vec<f64>, mean: Vec<f64>) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::config("item_count", "must be at least 1"));
        }
        if initial.len() != mean.len() {
            return Err(Error::config(
                "interests",
                format!(
                    "{} initial values but {} current values",
                    initial.len(),
                    mean.len()
                ),
            ));
        }
        if let Some(bad) = initial.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::config(
                "initial_interests",
                format!("{bad} is outside [-1, 1]"),
            ));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("interests", "values must be finite"));
        }
        Ok(InterestState { mean, initial })
    }

    pub fn item_count(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    fn check_selection(&self, selection: &Selection) -> Result<()> {
        match selection.items().last() {
            Some(&last) if last >= self.item_count() => Err(Error::InvalidSelection(format!(
                "item {last} out of range for {} items",
                self.item_count()
            ))),
            _ => Ok(()),
        }
    }

    /// Advance the interests by one step given what was shown and clicked.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        selection: &Selection,
        response: &Response,
        delta: f64,
        model: &InterestModel,
        rng: &mut R,
    ) -> Result<()> {
        response.check_aligned(selection)?;
        self.check_selection(selection)?;

        for (&item, &clicked) in selection.items().iter().zip(response.clicks()) {
            self.mean[item] += if clicked { delta } else { -delta };
        }

        if let Some((q, s)) = model.effective_restarts() {
            for value in self.mean.iter_mut() {
                if rng.random::<f64>() < q {
                    let fresh = sample_initial_interest(rng);
                    *value = (1.0 - s) * fresh + s * *value;
                }
            }
        }
        Ok(())
    }
}

/// The interests the user acts on this step, one value per shown item.
///
/// Only the additive-noise model perturbs them; the other models return the
/// mean interests unchanged and consume no draws.
pub fn perceive<R: Rng + ?Sized>(
    state: &InterestState,
    selection: &Selection,
    model: &InterestModel,
    rng: &mut R,
) -> Vec<f64> {
    let shown = selection.items().iter().map(|&i| state.mean[i]);
    match *model {
        InterestModel::AdditiveNoise { noise_width } if noise_width > 0.0 => shown
            .map(|m| m + rng.random_range(-noise_width..=noise_width))
            .collect(),
        _ => shown.collect(),
    }
}

/// Independent Bernoulli(σ(x)) clicks for each perceived interest.
pub fn sample_response<R: Rng + ?Sized>(perceived: &[f64], rng: &mut R) -> Response {
    Response(
        perceived
            .iter()
            .map(|&x| rng.random::<f64>() < sigmoid(x))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn sigmoid_reference_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        // 1/(1+e^-3) and 1/(1+e^-1) from 40-digit arithmetic
        assert!((sigmoid(3.0) - 0.952_574_126_822_433_2).abs() < 1e-12);
        assert!((sigmoid(1.0) - 0.731_058_578_630_004_9).abs() < 1e-12);
        for x in [0.1, 1.0, 7.5, 36.0, 700.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(700.0), 1.0);
        let tiny = sigmoid(-700.0);
        assert!(tiny > 0.0 && (tiny / 9.859_676_543_759_77e-305 - 1.0).abs() < 1e-9);
        assert!(sigmoid(-50.0) > 0.0);
        assert!(sigmoid(-1e308).is_finite() && sigmoid(1e308).is_finite());
    }

    #[test]
    fn init_rejects_zero_items() {
        assert!(matches!(
            InterestState::init(0, &mut rng(1)),
            Err(Error::InvalidConfig { field: "item_count", .. })
        ));
    }

    #[test]
    fn init_draws_in_range() {
        let s = InterestState::init(1, &mut rng(2)).unwrap();
        assert_eq!(s.item_count(), 1);
        let s = InterestState::init(10, &mut rng(3)).unwrap();
        assert_eq!(s.mean(), s.initial());
        assert!(s.initial().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn initial_interest_moments() {
        let mut r = rng(4);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_initial_interest(&mut r)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert!((var / (1.0 / 3.0) - 1.0).abs() <= 0.05, "var {var}");
    }

    #[test]
    fn delta_range_mean_and_determinism() {
        let mut r = rng(5);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = sample_delta(&mut r);
            assert!((0.0..=MAX_DELTA).contains(&d));
            sum += d;
        }
        let mean = sum / n as f64;
        assert!((0.0049..=0.0051).contains(&mean), "mean {mean}");

        let mut r1 = rng(9);
        let mut r2 = rng(9);
        for _ in 0..50 {
            assert_eq!(sample_delta(&mut r1), sample_delta(&mut r2));
        }
    }

    #[test]
    fn selection_validation() {
        assert_eq!(Selection::new(vec![2, 0], 3).unwrap().items(), &[0, 2]);
        assert!(Selection::new(vec![], 3).is_err());
        assert!(Selection::new(vec![1, 1], 3).is_err());
        assert!(Selection::new(vec![3], 3).is_err());
    }

    #[test]
    fn perceive_identity_paths() {
        let state = InterestState::from_parts(vec![0.1, -0.2, 0.3], vec![0.5, -0.7, 0.9]).unwrap();
        let sel = Selection::new(vec![0, 2], 3).unwrap();
        let mut r = rng(6);
        let basic = perceive(&state, &sel, &InterestModel::Basic, &mut r);
        assert_eq!(basic, vec![0.5, 0.9]);
        let zero = perceive(&state, &sel, &InterestModel::AdditiveNoise { noise_width: 0.0 }, &mut r);
        assert_eq!(zero, vec![0.5, 0.9]);
    }

    #[test]
    fn perceive_noise_is_unbiased_and_bounded() {
        let state = InterestState::from_initial(vec![0.25, -0.5]).unwrap();
        let sel = Selection::new(vec![0], 2).unwrap();
        let model = InterestModel::AdditiveNoise { noise_width: 3.0 };
        let mut r = rng(7);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let noise = perceive(&state, &sel, &model, &mut r)[0] - 0.25;
            assert!((-3.0..=3.0).contains(&noise));
            sum += noise;
        }
        assert!((sum / n as f64).abs() <= 0.05);
    }

    fn click_frequency(x: f64, n: usize, seed: u64) -> f64 {
        let mut r = rng(seed);
        let hits: usize = (0..n)
            .map(|_| sample_response(&[x], &mut r).click_count())
            .sum();
        hits as f64 / n as f64
    }

    #[test]
    fn response_frequencies() {
        assert!((click_frequency(0.0, 100_000, 10) - 0.5).abs() <= 0.01);
        assert!(click_frequency(50.0, 10_000, 11) >= 0.999);
        assert!((click_frequency(1.0, 100_000, 12) - 0.731_059).abs() <= 0.01);
    }

    #[test]
    fn basic_step_moves_only_shown_items() {
        let mut state = InterestState::from_initial(vec![0.1, 0.2, 0.3]).unwrap();
        let sel = Selection::new(vec![0, 1], 3).unwrap();
        let resp = Response::new(vec![true, false]);
        state
            .step(&sel, &resp, 0.007, &InterestModel::Basic, &mut rng(0))
            .unwrap();
        assert_eq!(state.mean(), &[0.1 + 0.007, 0.2 - 0.007, 0.3]);
        assert_eq!(state.initial(), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn step_rejects_misaligned_response() {
        let mut state = InterestState::from_initial(vec![0.0, 0.0]).unwrap();
        let sel = Selection::new(vec![0], 2).unwrap();
        let err = state
            .step(&sel, &Response::new(vec![true, true]), 0.005, &InterestModel::Basic, &mut rng(0))
            .unwrap_err();
        assert_eq!(err, Error::Misaligned { selection: 1, response: 2 });
    }

    #[test]
    fn full_scale_restart_equals_basic() {
        let init = vec![0.4, -0.3, 0.9, -0.8];
        let sel = Selection::new(vec![1, 2], 4).unwrap();
        let resp = Response::new(vec![true, false]);
        let mut basic = InterestState::from_initial(init.clone()).unwrap();
        basic
            .step(&sel, &resp, 0.006, &InterestModel::Basic, &mut rng(1))
            .unwrap();
        for q in [0.0, 0.3, 1.0] {
            let mut restarted = InterestState::from_initial(init.clone()).unwrap();
            let model = InterestModel::Restarts {
                restart_probability: q,
                restart_scale: 1.0,
            };
            restarted.step(&sel, &resp, 0.006, &model, &mut rng(2)).unwrap();
            assert_eq!(restarted, basic);
        }
    }

    #[test]
    fn full_reset_is_independent_of_old_state() {
        let model = InterestModel::Restarts {
            restart_probability: 1.0,
            restart_scale: 0.0,
        };
        let mut r = rng(3);
        let n = 10_000;
        let mut old = Vec::with_capacity(n);
        let mut new = Vec::with_capacity(n);
        for _ in 0..n {
            let mut s = InterestState::init(2, &mut r).unwrap();
            let sel = Selection::new(vec![0], 2).unwrap();
            let before = s.mean()[1];
            s.step(&sel, &Response::new(vec![true]), 0.005, &model, &mut r)
                .unwrap();
            assert!((-1.0..=1.0).contains(&s.mean()[1]));
            old.push(before);
            new.push(s.mean()[1]);
        }
        let corr = correlation(&old, &new);
        assert!(corr.abs() < 0.05, "correlation {corr}");
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn model_validation() {
        assert!(InterestModel::AdditiveNoise { noise_width: -0.1 }.validate().is_err());
        assert!(InterestModel::AdditiveNoise { noise_width: f64::NAN }.validate().is_err());
        let bad_q = InterestModel::Restarts { restart_probability: 1.5, restart_scale: 0.5 };
        assert!(matches!(
            bad_q.validate(),
            Err(Error::InvalidConfig { field: "restart_probability", .. })
        ));
        let bad_s = InterestModel::Restarts { restart_probability: 0.5, restart_scale: -0.5 };
        assert!(matches!(
            bad_s.validate(),
            Err(Error::InvalidConfig { field: "restart_scale", .. })
        ));
    }
}
