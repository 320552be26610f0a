//! Windowed EM re-estimation of the transition matrix.

use log::warn;

use crate::error::{Error, Result};
use crate::kalman::{kf_run, log_likelihood, rts_smooth, LinearGaussianSsm, Observations, Retention, Smoothed};
use crate::linalg::{pinv_unchecked, spd_solve, Matrix, Vector, DEFAULT_RANK_TOLERANCE};
use crate::online::{run_online, Estimate, EstimationContext, LockConfig, RunOutput, TransitionEstimator};
use crate::operator::Operator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmkfConfig {
    pub tau: usize,
    pub iterations: usize,
    pub eta: f64,
    pub c: f64,
}

impl EmkfConfig {
    pub fn new(tau: usize, iterations: usize, eta: f64, c: f64) -> Result<Self> {
        let config = Self { tau, iterations, eta, c };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        self.lock_config().validate()
    }

    pub fn lock_config(&self) -> LockConfig {
        LockConfig {
            tau: self.tau,
            eta: self.eta,
            c: self.c,
        }
    }
}

/// One M-step for `F` with its sufficient statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EmStep {
    pub f_hat: Matrix,
    /// `sum_t V_{t,t-1|T} + x_{t|T} x_{t-1|T}^T`
    pub numerator: Matrix,
    /// `sum_t V_{t-1|T} + x_{t-1|T} x_{t-1|T}^T`
    pub denominator: Matrix,
    /// The denominator was singular and a pseudo-inverse was used.
    pub pseudo_inverse: bool,
}

/// Sums over every transition, including the one from the initial state
/// into the first observed step.
pub fn sufficient_statistics(smoothed: &Smoothed) -> (Matrix, Matrix) {
    let m = smoothed.initial_mean.len();
    let mut num = Matrix::zeros(m, m);
    let mut den = Matrix::zeros(m, m);
    for (t, s) in smoothed.states.iter().enumerate() {
        let (prev_x, prev_v) = if t == 0 {
            (&smoothed.initial_mean, &smoothed.initial_cov)
        } else {
            let p = &smoothed.states[t - 1];
            (&p.x_smooth, &p.v_smooth)
        };
        num += &s.v_lag + &s.x_smooth * prev_x.transpose();
        den += prev_v + prev_x * prev_x.transpose();
    }
    (num, den)
}

/// E-step by RTS smoothing over the window, then the closed-form
/// maximizer of the expected complete-data log-likelihood in `F`.
pub fn em_transition_step<'a>(model: &LinearGaussianSsm, window: impl Into<Observations<'a>>) -> Result<EmStep> {
    let obs = window.into();
    if obs.len() < 2 {
        return Err(Error::InvalidInput("EM window needs at least two observations".into()));
    }
    let states = kf_run(model, obs)?;
    let smoothed = rts_smooth(model, &states)?;
    let (numerator, denominator) = sufficient_statistics(&smoothed);
    // F = N D^{-1}  <=>  F^T = D^{-1} N^T with D symmetric.
    let (f_hat, pseudo_inverse) = match spd_solve(&denominator, &numerator.transpose()) {
        Some((ft, _)) => (ft.transpose(), false),
        None => {
            warn!("EM denominator is singular; using pseudo-inverse");
            (&numerator * pinv_unchecked(denominator.as_view(), DEFAULT_RANK_TOLERANCE), true)
        }
    };
    Ok(EmStep {
        f_hat,
        numerator,
        denominator,
        pseudo_inverse,
    })
}

/// Runs `iterations` EM steps on the window starting from the current
/// operator. The returned estimate carries the window log-likelihood before
/// the first step and after each step.
#[derive(Debug, Clone, Copy)]
pub struct EmkfEstimator {
    pub iterations: usize,
}

impl TransitionEstimator for EmkfEstimator {
    fn needs_prior(&self) -> bool {
        true
    }

    fn estimate(&mut self, ctx: &EstimationContext<'_>) -> Result<Estimate> {
        let (x, v) = ctx
            .prior
            .ok_or_else(|| Error::InvalidInput("EM update requires the state prior".into()))?;
        let frames: Vec<Vector> = ctx.window.frames().cloned().collect();
        let mut model = ctx
            .model
            .with_transition(ctx.current.to_dense())?
            .with_prior(x.clone(), v.clone())?;
        let mut trace = vec![log_likelihood(&model, &frames)?.value];
        for _ in 0..self.iterations {
            let step = em_transition_step(&model, &frames)?;
            model = model.with_transition(step.f_hat)?;
            trace.push(log_likelihood(&model, &frames)?.value);
        }
        Ok(Estimate {
            f_hat: Operator::Dense(model.f),
            g_hat: None,
            log_likelihoods: trace,
        })
    }
}

pub fn emkf_run<'a>(
    model: &LinearGaussianSsm,
    observations: impl Into<Observations<'a>>,
    config: &EmkfConfig,
) -> Result<RunOutput> {
    emkf_run_with(model, observations.into(), config, Retention::Full)
}

pub fn emkf_run_with(
    model: &LinearGaussianSsm,
    obs: Observations<'_>,
    config: &EmkfConfig,
    retention: Retention,
) -> Result<RunOutput> {
    config.validate()?;
    let mut est = EmkfEstimator {
        iterations: config.iterations,
    };
    run_online(model, obs, &config.lock_config(), Some(&mut est), retention)
}
