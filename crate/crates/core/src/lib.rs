//! Online estimation of transition operators for linear Gaussian
//! state-space models.
//!
//! The crate provides a Kalman filter and RTS smoother, an EM-based
//! transition estimator, and three direct estimators that fit the transition
//! from a short window of observations: a global one, a localized one
//! restricted to a neighborhood graph, and a parameter-shared spatially
//! uniform one. Synthetic data generators and evaluation metrics are included.

pub mod datagen;
pub mod emkf;
pub mod error;
pub mod grid;
pub mod kalman;
pub mod linalg;
pub mod llock;
pub mod metrics;
pub mod lock;
pub mod online;
pub mod operator;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod slock;

pub use emkf::{em_transition_step, emkf_run, emkf_run_with, EmStep, EmkfConfig, EmkfEstimator};
pub use error::{Error, Result};
pub use kalman::{
    kf_predict, kf_run, kf_run_with, kf_update, log_likelihood, rts_smooth, FilterState, KalmanFilter,
    LinearGaussianSsm, LogLikelihood, Observations, Retention, Smoothed, SmoothedState, StepCovariances,
};
pub use grid::GridSpec;
pub use linalg::{Matrix, PinvOptions, Vector};
pub use llock::{build_adjacency, llock_run, llock_run_with, local_g, LlockEstimator, LocalizationMatrix};
pub use lock::{blend_update, estimate_f, estimate_g, lock_run, lock_run_with, LockEstimator};
pub use online::{
    run_online, Estimate, EstimationContext, LockConfig, ObservationWindow, OperatorUpdate, RunOutput,
    TransitionEstimator,
};
pub use operator::{Operator, SparseMatrix};
pub use slock::{
    build_parameter_map, build_xi, estimate_theta, estimate_theta_stacked, slock_run, slock_run_with, theta_to_g,
    ParameterMap, SlockEstimator,
};
pub use datagen::{FrameSequence, TrueDynamics};
pub use metrics::{prediction_rmse, rmse, rmse_series, srmse, srmse_true_zero, support_errors, MetricSeries};
