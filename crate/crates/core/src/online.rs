//! Shared online loop: filter every step and periodically replace the
//! transition operator with a blended estimate.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::kalman::{FilterState, KalmanFilter, LinearGaussianSsm, Observations, Retention};
use crate::linalg::{Matrix, Vector};
use crate::operator::Operator;

/// Update interval, learning rate and cutoff distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockConfig {
    pub tau: usize,
    pub eta: f64,
    pub c: f64,
}

impl LockConfig {
    /// `eta = 0` is accepted and freezes the operator.
    pub fn new(tau: usize, eta: f64, c: f64) -> Result<Self> {
        let config = Self { tau, eta, c };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::InvalidInput("tau must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidInput(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if self.c.is_nan() || self.c <= 0.0 {
            return Err(Error::InvalidInput(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }
}

/// The most recent `tau + 1` observations.
#[derive(Debug, Clone)]
pub struct ObservationWindow {
    capacity: usize,
    frames: VecDeque<Vector>,
}

impl ObservationWindow {
    pub fn new(tau: usize) -> Self {
        Self {
            capacity: tau + 1,
            frames: VecDeque::with_capacity(tau + 1),
        }
    }

    pub fn from_frames(frames: &[Vector]) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::InvalidInput("a window needs at least two frames".into()));
        }
        let l = frames[0].len();
        if frames.iter().any(|f| f.len() != l) {
            return Err(Error::DimensionMismatch("window frames differ in length".into()));
        }
        let mut w = Self::new(frames.len() - 1);
        for f in frames {
            w.push(f.clone());
        }
        Ok(w)
    }

    pub fn tau(&self) -> usize {
        self.capacity - 1
    }

    pub fn push(&mut self, y: Vector) {
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(y);
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.frames.len() == self.capacity
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &Vector> {
        self.frames.iter()
    }

    pub fn frame(&self, k: usize) -> &Vector {
        &self.frames[k]
    }

    fn columns(&self, range: std::ops::Range<usize>) -> Matrix {
        let l = self.frames.front().map_or(0, |f| f.len());
        let mut m = Matrix::zeros(l, range.len());
        for (col, k) in range.enumerate() {
            m.set_column(col, &self.frames[k]);
        }
        m
    }

    /// `(y_{t-tau+1}, ..., y_t)` as columns.
    pub fn y_now(&self) -> Matrix {
        self.columns(1..self.frames.len())
    }

    /// `(y_{t-tau}, ..., y_{t-1})` as columns.
    pub fn y_prev(&self) -> Matrix {
        self.columns(0..self.frames.len().saturating_sub(1))
    }
}

/// Inputs available to an estimator at an update point.
pub struct EstimationContext<'a> {
    pub t: usize,
    pub window: &'a ObservationWindow,
    pub current: &'a Operator,
    pub model: &'a LinearGaussianSsm,
    /// Filtered mean and covariance just before the window's first frame.
    /// Only provided to estimators that ask for it.
    pub prior: Option<(&'a Vector, &'a Matrix)>,
}

/// Result of one estimation.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub f_hat: Operator,
    /// Observation-space estimate when it differs from `f_hat`.
    pub g_hat: Option<Operator>,
    /// Window log-likelihood trace for iterative estimators.
    pub log_likelihoods: Vec<f64>,
}

impl Estimate {
    pub fn new(f_hat: Operator) -> Self {
        Self {
            f_hat,
            g_hat: None,
            log_likelihoods: Vec::new(),
        }
    }

    /// The observation-space estimate (equal to `f_hat` when H is the identity).
    pub fn g(&self) -> &Operator {
        self.g_hat.as_ref().unwrap_or(&self.f_hat)
    }
}

pub trait TransitionEstimator {
    fn needs_prior(&self) -> bool {
        false
    }

    fn estimate(&mut self, ctx: &EstimationContext<'_>) -> Result<Estimate>;
}

/// One operator replacement.
#[derive(Debug, Clone)]
pub struct OperatorUpdate {
    /// Step at which the update fired; the new operator applies from `t + 1`.
    pub t: usize,
    pub estimate: Estimate,
    pub operator: Operator,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub states: Vec<FilterState>,
    pub initial: Operator,
    pub updates: Vec<OperatorUpdate>,
}

impl RunOutput {
    /// Operator used to predict step `t + 1`, i.e. after every update at or
    /// before `t`.
    pub fn operator_after(&self, t: usize) -> &Operator {
        self.updates
            .iter()
            .rev()
            .find(|u| u.t <= t)
            .map_or(&self.initial, |u| &u.operator)
    }

    pub fn final_operator(&self) -> &Operator {
        self.updates.last().map_or(&self.initial, |u| &u.operator)
    }

    pub fn filtered_means(&self) -> Vec<Vector> {
        self.states.iter().map(|s| s.x_filt.clone()).collect()
    }
}

/// Runs the filter with an optional estimator. Without one this is the plain
/// Kalman filter with the model's transition matrix.
pub fn run_online(
    model: &LinearGaussianSsm,
    obs: Observations<'_>,
    config: &LockConfig,
    mut estimator: Option<&mut dyn TransitionEstimator>,
    retention: Retention,
) -> Result<RunOutput> {
    config.validate()?;
    if obs.is_empty() {
        return Err(Error::InvalidInput("observation sequence is empty".into()));
    }
    let l = model.obs_dim();
    if let Some(t) = obs.frames.iter().position(|y| y.len() != l) {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, expected {l}",
            obs.frames[t].len()
        ))
        .at_step(t));
    }

    let initial = Operator::auto(&model.f);
    let mut current = initial.clone();
    let mut filter = KalmanFilter::new(model);
    let mut window = ObservationWindow::new(config.tau);
    let needs_prior = estimator.as_ref().is_some_and(|e| e.needs_prior());
    // Posteriors for steps t - tau - 1 ..= t.
    let mut posteriors: VecDeque<(Vector, Matrix)> = VecDeque::new();
    let mut states = Vec::with_capacity(obs.len());
    let mut updates = Vec::new();

    for t in 0..obs.len() {
        let y = obs.get(t);
        states.push(filter.step(&current, y, retention)?);
        match y {
            Some(y) => window.push(y.clone()),
            None => window.clear(),
        }
        if needs_prior {
            let (x, v) = filter.posterior();
            posteriors.push_back((x.clone(), v.clone()));
            if posteriors.len() > config.tau + 2 {
                posteriors.pop_front();
            }
        }

        let Some(est) = estimator.as_deref_mut() else {
            continue;
        };
        if t % config.tau != 0 || !window.is_full() {
            continue;
        }
        let prior = if !needs_prior {
            None
        } else if t > config.tau {
            let (x, v) = &posteriors[0];
            Some((x, v))
        } else {
            Some((&model.x0, &model.v0))
        };
        let ctx = EstimationContext {
            t,
            window: &window,
            current: &current,
            model,
            prior,
        };
        let estimate = est.estimate(&ctx).map_err(|e| e.at_step(t))?;
        current = current.blend(&estimate.f_hat, config.eta, config.c)?;
        updates.push(OperatorUpdate {
            t,
            estimate,
            operator: current.clone(),
        });
    }

    Ok(RunOutput {
        states,
        initial,
        updates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kalman::kf_run;

    struct Fixed(Matrix);

    impl TransitionEstimator for Fixed {
        fn estimate(&mut self, _ctx: &EstimationContext<'_>) -> Result<Estimate> {
            Ok(Estimate::new(Operator::Dense(self.0.clone())))
        }
    }

    fn model() -> LinearGaussianSsm {
        LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2) * 0.01,
            Matrix::identity(2, 2) * 0.1,
            Vector::zeros(2),
            Matrix::identity(2, 2),
        )
        .unwrap()
    }

    fn frames(n: usize) -> Vec<Vector> {
        (0..n).map(|t| Vector::from_vec(vec![t as f64, -(t as f64) * 0.5])).collect()
    }

    #[test]
    fn window_columns_overlap() {
        let w = ObservationWindow::from_frames(&frames(4)).unwrap();
        assert_eq!(w.tau(), 3);
        let now = w.y_now();
        let prev = w.y_prev();
        assert_eq!(now.ncols(), 3);
        assert_eq!(prev.column(1), now.column(0));
        assert_eq!(now.column(2)[0], 3.0);
        assert_eq!(prev.column(0)[0], 0.0);
    }

    #[test]
    fn updates_fire_on_multiples_of_tau_once_full() {
        let m = model();
        let obs = frames(10);
        let mut est = Fixed(Matrix::zeros(2, 2));
        let config = LockConfig::new(3, 0.5, 0.1).unwrap();
        let out = run_online(&m, Observations::new(&obs), &config, Some(&mut est), Retention::Full).unwrap();
        let times: Vec<usize> = out.updates.iter().map(|u| u.t).collect();
        assert_eq!(times, vec![3, 6, 9]);
        assert!((out.final_operator().get(0, 0) - (1.0 - 3.0 * 0.05)).abs() < 1e-15);
        assert!((out.operator_after(5).get(0, 0) - 0.95).abs() < 1e-15);
        assert_eq!(out.operator_after(2).get(0, 0), 1.0);
    }

    #[test]
    fn no_estimator_matches_plain_filter() {
        let m = model();
        let obs = frames(7);
        let config = LockConfig::new(2, 0.5, 1.0).unwrap();
        let out = run_online(&m, Observations::new(&obs), &config, None, Retention::Full).unwrap();
        assert_eq!(out.states, kf_run(&m, &obs).unwrap());
        assert!(out.updates.is_empty());
    }

    #[test]
    fn missing_frames_skip_estimation() {
        let m = model();
        let obs = frames(10);
        let mut mask = vec![false; 10];
        mask[5] = true;
        let mut est = Fixed(Matrix::zeros(2, 2));
        let config = LockConfig::new(3, 0.5, 0.1).unwrap();
        let obs = Observations::with_missing(&obs, &mask).unwrap();
        let out = run_online(&m, obs, &config, Some(&mut est), Retention::Full).unwrap();
        let times: Vec<usize> = out.updates.iter().map(|u| u.t).collect();
        assert_eq!(times, vec![3, 9]);
    }

    #[test]
    fn config_validation() {
        assert!(LockConfig::new(0, 0.5, 1.0).is_err());
        assert!(LockConfig::new(1, 1.5, 1.0).is_err());
        assert!(LockConfig::new(1, 0.5, 0.0).is_err());
        assert!(LockConfig::new(1, 0.0, f64::INFINITY).is_ok());
    }
}
