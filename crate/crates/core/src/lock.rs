//! Global transition estimation from an observation window.

use crate::error::{Error, Result};
use crate::kalman::{LinearGaussianSsm, Observations, Retention};
use crate::linalg::{pinv_unchecked, Matrix, DEFAULT_RANK_TOLERANCE};
use crate::online::{run_online, Estimate, EstimationContext, LockConfig, RunOutput, TransitionEstimator};
use crate::operator::Operator;

/// `G = Y_t Y_{t-1}^+`, the minimum-norm least-squares fit of
/// `Y_t = G Y_{t-1}`.
pub fn estimate_g(y_now: &Matrix, y_prev: &Matrix) -> Result<Matrix> {
    if y_now.shape() != y_prev.shape() {
        return Err(Error::InvalidInput(format!(
            "window matrices differ in shape: {:?} vs {:?}",
            y_now.shape(),
            y_prev.shape()
        )));
    }
    if y_now.ncols() == 0 {
        return Err(Error::InvalidInput("window holds no transitions".into()));
    }
    crate::error::ensure_finite("window", y_now.as_slice())?;
    crate::error::ensure_finite("window", y_prev.as_slice())?;
    Ok(y_now * pinv_unchecked(y_prev.as_view(), DEFAULT_RANK_TOLERANCE))
}

/// `F = H_now^+ G H_prev`.
pub fn estimate_f(g: &Matrix, h_now: &Matrix, h_prev: &Matrix) -> Result<Matrix> {
    let l = g.nrows();
    if !g.is_square() || h_now.nrows() != l || h_prev.nrows() != l || h_now.ncols() != h_prev.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "G is {:?}, H_now {:?}, H_prev {:?}",
            g.shape(),
            h_now.shape(),
            h_prev.shape()
        )));
    }
    Ok(pinv_unchecked(h_now.as_view(), DEFAULT_RANK_TOLERANCE) * g * h_prev)
}

/// `F_old - eta * crop(F_old - F_hat, -c, c)`.
pub fn blend_update(f_old: &Matrix, f_hat: &Matrix, eta: f64, c: f64) -> Result<Matrix> {
    LockConfig::new(1, eta, c)?;
    match Operator::Dense(f_old.clone()).blend(&Operator::Dense(f_hat.clone()), eta, c)? {
        Operator::Dense(m) => Ok(m),
        Operator::Sparse(s) => Ok(s.to_dense()),
    }
}

/// Maps an observation-space estimate to state space.
pub(crate) fn to_state_space(model: &LinearGaussianSsm, g: Operator) -> Result<Estimate> {
    if model.h_is_identity() {
        return Ok(Estimate::new(g));
    }
    let f = estimate_f(&g.to_dense(), &model.h, &model.h)?;
    Ok(Estimate {
        f_hat: Operator::Dense(f),
        g_hat: Some(g),
        log_likelihoods: Vec::new(),
    })
}

/// Dense estimator over the full observation window.
#[derive(Debug, Default, Clone, Copy)]
pub struct LockEstimator;

impl TransitionEstimator for LockEstimator {
    fn estimate(&mut self, ctx: &EstimationContext<'_>) -> Result<Estimate> {
        let g = estimate_g(&ctx.window.y_now(), &ctx.window.y_prev())?;
        to_state_space(ctx.model, Operator::Dense(g))
    }
}

pub fn lock_run<'a>(
    model: &LinearGaussianSsm,
    observations: impl Into<Observations<'a>>,
    config: &LockConfig,
) -> Result<RunOutput> {
    lock_run_with(model, observations.into(), config, Retention::Full)
}

pub fn lock_run_with(
    model: &LinearGaussianSsm,
    obs: Observations<'_>,
    config: &LockConfig,
    retention: Retention,
) -> Result<RunOutput> {
    run_online(model, obs, config, Some(&mut LockEstimator), retention)
}
