//! Linear Gaussian state-space model, Kalman filter and RTS smoother.
//!
//! Time convention: the model's `x0`/`v0` describe the state one step before
//! the first observation. Every observation `y_t` is processed by a predict
//! step followed by an update step, so `x_pred` at `t = 0` is `F x0`.

use std::f64::consts::PI;

use log::warn;

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{
    is_identity, pinv_unchecked, singular_values, spd_solve, symmetrize_in_place, Matrix, Vector,
    DEFAULT_RANK_TOLERANCE,
};
use crate::operator::Operator;

/// `x_t = F x_{t-1} + v_t`, `y_t = H x_t + w_t`, `v_t ~ N(0, Q)`, `w_t ~ N(0, R)`.
#[derive(Debug, Clone)]
pub struct LinearGaussianSsm {
    pub f: Matrix,
    pub h: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub x0: Vector,
    pub v0: Matrix,
    h_is_identity: bool,
}

impl LinearGaussianSsm {
    pub fn new(f: Matrix, h: Matrix, q: Matrix, r: Matrix, x0: Vector, v0: Matrix) -> Result<Self> {
        let m = f.nrows();
        if m == 0 || !f.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "F must be square and non-empty, got {}x{}",
                f.nrows(),
                f.ncols()
            )));
        }
        let l = h.nrows();
        if l == 0 || h.ncols() != m {
            return Err(Error::DimensionMismatch(format!(
                "H must be l x {m}, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        for (name, mat, n) in [("Q", &q, m), ("R", &r, l), ("V0", &v0, m)] {
            if mat.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
        }
        if x0.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "x0 must have length {m}, got {}",
                x0.len()
            )));
        }
        ensure_finite("F", f.as_slice())?;
        ensure_finite("H", h.as_slice())?;
        ensure_finite("x0", x0.as_slice())?;
        for (name, mat) in [("Q", &q), ("R", &r), ("V0", &v0)] {
            ensure_finite(name, mat.as_slice())?;
            check_psd(name, mat)?;
        }
        let h_is_identity = is_identity(&h);
        Ok(Self {
            f,
            h,
            q,
            r,
            x0,
            v0,
            h_is_identity,
        })
    }

    /// Same model with the transition matrix replaced.
    pub fn with_transition(&self, f: Matrix) -> Result<Self> {
        if f.shape() != self.f.shape() {
            return Err(Error::DimensionMismatch(format!(
                "replacement F must be {:?}, got {:?}",
                self.f.shape(),
                f.shape()
            )));
        }
        ensure_finite("F", f.as_slice())?;
        Ok(Self { f, ..self.clone() })
    }

    /// Same model with a different initial state.
    pub fn with_prior(&self, x0: Vector, v0: Matrix) -> Result<Self> {
        let m = self.state_dim();
        if x0.len() != m || v0.shape() != (m, m) {
            return Err(Error::DimensionMismatch("prior dimensions do not match the model".into()));
        }
        Ok(Self {
            x0,
            v0,
            ..self.clone()
        })
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn h_is_identity(&self) -> bool {
        self.h_is_identity
    }
}

fn check_psd(name: &str, mat: &Matrix) -> Result<()> {
    let n = mat.nrows();
    let scale = mat.amax().max(1.0);
    for j in 0..n {
        for i in (j + 1)..n {
            if (mat[(i, j)] - mat[(j, i)]).abs() > 1e-9 * scale {
                return Err(Error::InvalidInput(format!("{name} is not symmetric")));
            }
        }
    }
    // A covariance passes when a slightly regularized copy factorizes.
    let jitter = 1e-9 * scale;
    let shifted = mat + Matrix::identity(n, n) * jitter;
    if shifted.cholesky().is_none() {
        return Err(Error::InvalidInput(format!("{name} is not positive semi-definite")));
    }
    Ok(())
}

/// Covariance-level quantities of a filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCovariances {
    pub v_pred: Matrix,
    pub gain: Matrix,
    pub v_filt: Matrix,
}

/// One step of the filtering trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub t: usize,
    pub x_pred: Vector,
    pub x_filt: Vector,
    /// Present when the run retains covariances.
    pub cov: Option<StepCovariances>,
    /// Log-density of this observation under the one-step-ahead predictive
    /// distribution (zero for missing observations).
    pub log_likelihood: f64,
    pub missing: bool,
    /// The innovation covariance was singular and a pseudo-inverse was used.
    pub singular_innovation: bool,
}

impl FilterState {
    fn covariances(&self) -> Result<&StepCovariances> {
        self.cov.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!("filter state {} does not retain covariances", self.t))
        })
    }
}

/// What a run keeps per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    /// Means, covariances and gains.
    #[default]
    Full,
    /// Means only; required for high-dimensional runs.
    MeansOnly,
}

/// Observation sequence with an optional missing-data mask.
#[derive(Debug, Clone, Copy)]
pub struct Observations<'a> {
    pub frames: &'a [Vector],
    pub missing: Option<&'a [bool]>,
}

impl<'a> Observations<'a> {
    pub fn new(frames: &'a [Vector]) -> Self {
        Self {
            frames,
            missing: None,
        }
    }

    pub fn with_missing(frames: &'a [Vector], missing: &'a [bool]) -> Result<Self> {
        if missing.len() != frames.len() {
            return Err(Error::DimensionMismatch(format!(
                "missing mask has {} entries for {} frames",
                missing.len(),
                frames.len()
            )));
        }
        Ok(Self {
            frames,
            missing: Some(missing),
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn is_missing(&self, t: usize) -> bool {
        self.missing.is_some_and(|m| m[t])
    }

    pub fn get(&self, t: usize) -> Option<&'a Vector> {
        if self.is_missing(t) {
            None
        } else {
            Some(&self.frames[t])
        }
    }
}

impl<'a> From<&'a [Vector]> for Observations<'a> {
    fn from(frames: &'a [Vector]) -> Self {
        Observations::new(frames)
    }
}

impl<'a> From<&'a Vec<Vector>> for Observations<'a> {
    fn from(frames: &'a Vec<Vector>) -> Self {
        Observations::new(frames)
    }
}

/// `x_pred = F x`, `V_pred = F V F^T + Q`.
pub fn kf_predict(model: &LinearGaussianSsm, x_filt: &Vector, v_filt: &Matrix) -> Result<(Vector, Matrix)> {
    let m = model.state_dim();
    if x_filt.len() != m || v_filt.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "filtered state must have dimension {m}"
        )));
    }
    Ok(predict_with(&Operator::Dense(model.f.clone()), &model.q, x_filt, v_filt))
}

pub(crate) fn predict_with(f: &Operator, q: &Matrix, x: &Vector, v: &Matrix) -> (Vector, Matrix) {
    let x_pred = f.apply(x);
    let mut v_pred = f.sandwich(v);
    v_pred += q;
    symmetrize_in_place(&mut v_pred);
    (x_pred, v_pred)
}

pub(crate) struct Posterior {
    pub x_filt: Vector,
    pub v_filt: Matrix,
    pub gain: Option<Matrix>,
    pub log_likelihood: f64,
    pub singular: bool,
}

/// Measurement update. The gain is formed as `K^T = S^{-1} H V_pred`.
pub(crate) fn update_core(
    model: &LinearGaussianSsm,
    x_pred: &Vector,
    v_pred: &Matrix,
    y: &Vector,
    keep_gain: bool,
) -> Result<Posterior> {
    let l = model.obs_dim();
    if y.len() != l {
        return Err(Error::DimensionMismatch(format!(
            "observation has length {}, expected {l}",
            y.len()
        )));
    }
    ensure_finite("observation", y.as_slice())?;

    let (innovation, hv, s) = if model.h_is_identity {
        (y - x_pred, v_pred.clone(), v_pred + &model.r)
    } else {
        let hv = &model.h * v_pred;
        let mut s = &hv * model.h.transpose();
        s += &model.r;
        (y - &model.h * x_pred, hv, s)
    };
    let log_2pi = (2.0 * PI).ln();

    let (z, log_det, quad, singular) = match spd_solve(&s, &hv) {
        Some((z, chol)) => {
            let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let quad = innovation.dot(&chol.solve(&innovation));
            (z, log_det, quad, false)
        }
        None => {
            warn!("innovation covariance is singular; using pseudo-inverse and pseudo-determinant");
            let s_pinv = pinv_unchecked(s.as_view(), DEFAULT_RANK_TOLERANCE);
            let z = &s_pinv * &hv;
            let sv = singular_values(&s);
            let sigma_max = sv.iter().cloned().fold(0.0_f64, f64::max);
            let log_det = sv
                .iter()
                .filter(|&&sv| sv > DEFAULT_RANK_TOLERANCE * sigma_max)
                .map(|sv| sv.ln())
                .sum::<f64>();
            let quad = innovation.dot(&(&s_pinv * &innovation));
            (z, log_det, quad, true)
        }
    };

    let x_filt = x_pred + z.tr_mul(&innovation);
    let mut v_filt = v_pred.clone();
    v_filt.gemm(-1.0, &z.transpose(), &hv, 1.0);
    symmetrize_in_place(&mut v_filt);
    Ok(Posterior {
        x_filt,
        v_filt,
        gain: keep_gain.then(|| z.transpose()),
        log_likelihood: -0.5 * (l as f64 * log_2pi + log_det + quad),
        singular,
    })
}

/// Measurement update for a single observation.
pub fn kf_update(
    model: &LinearGaussianSsm,
    t: usize,
    x_pred: &Vector,
    v_pred: &Matrix,
    y: &Vector,
) -> Result<FilterState> {
    let m = model.state_dim();
    if x_pred.len() != m || v_pred.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "predicted state must have dimension {m}"
        )));
    }
    let post = update_core(model, x_pred, v_pred, y, true)?;
    Ok(FilterState {
        t,
        x_pred: x_pred.clone(),
        x_filt: post.x_filt,
        cov: Some(StepCovariances {
            v_pred: v_pred.clone(),
            gain: post.gain.expect("gain requested"),
            v_filt: post.v_filt,
        }),
        log_likelihood: post.log_likelihood,
        missing: false,
        singular_innovation: post.singular,
    })
}

/// Stateful filter that accepts a (possibly changing) transition operator at
/// every step.
#[derive(Debug, Clone)]
pub struct KalmanFilter<'m> {
    model: &'m LinearGaussianSsm,
    x: Vector,
    v: Matrix,
    t: usize,
}

impl<'m> KalmanFilter<'m> {
    pub fn new(model: &'m LinearGaussianSsm) -> Self {
        Self {
            model,
            x: model.x0.clone(),
            v: model.v0.clone(),
            t: 0,
        }
    }

    pub fn model(&self) -> &LinearGaussianSsm {
        self.model
    }

    /// Latest filtered mean and covariance.
    pub fn posterior(&self) -> (&Vector, &Matrix) {
        (&self.x, &self.v)
    }

    pub fn step(&mut self, f: &Operator, y: Option<&Vector>, retention: Retention) -> Result<FilterState> {
        let t = self.t;
        let (x_pred, v_pred) = predict_with(f, &self.model.q, &self.x, &self.v);
        let keep = retention == Retention::Full;
        let state = match y {
            Some(y) => {
                let post = update_core(self.model, &x_pred, &v_pred, y, keep).map_err(|e| e.at_step(t))?;
                let state = FilterState {
                    t,
                    x_pred: x_pred.clone(),
                    x_filt: post.x_filt.clone(),
                    cov: post.gain.map(|gain| StepCovariances {
                        v_pred: v_pred.clone(),
                        gain,
                        v_filt: post.v_filt.clone(),
                    }),
                    log_likelihood: post.log_likelihood,
                    missing: false,
                    singular_innovation: post.singular,
                };
                self.x = post.x_filt;
                self.v = post.v_filt;
                state
            }
            None => {
                let state = FilterState {
                    t,
                    x_pred: x_pred.clone(),
                    x_filt: x_pred.clone(),
                    cov: keep.then(|| StepCovariances {
                        v_pred: v_pred.clone(),
                        gain: Matrix::zeros(self.model.state_dim(), self.model.obs_dim()),
                        v_filt: v_pred.clone(),
                    }),
                    log_likelihood: 0.0,
                    missing: true,
                    singular_innovation: false,
                };
                self.x = x_pred;
                self.v = v_pred;
                state
            }
        };
        self.t += 1;
        Ok(state)
    }
}

fn check_observations(model: &LinearGaussianSsm, obs: &Observations<'_>) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::InvalidInput("observation sequence is empty".into()));
    }
    let l = model.obs_dim();
    for (t, y) in obs.frames.iter().enumerate() {
        if y.len() != l {
            return Err(Error::DimensionMismatch(format!(
                "observation has length {}, expected {l}",
                y.len()
            ))
            .at_step(t));
        }
    }
    Ok(())
}

/// Filters the whole sequence with the model's fixed transition matrix.
pub fn kf_run<'a>(model: &LinearGaussianSsm, observations: impl Into<Observations<'a>>) -> Result<Vec<FilterState>> {
    kf_run_with(model, observations.into(), Retention::Full)
}

pub fn kf_run_with(model: &LinearGaussianSsm, obs: Observations<'_>, retention: Retention) -> Result<Vec<FilterState>> {
    check_observations(model, &obs)?;
    let f = Operator::auto(&model.f);
    let mut filter = KalmanFilter::new(model);
    (0..obs.len())
        .map(|t| filter.step(&f, obs.get(t), retention))
        .collect()
}

/// Smoothed moments of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedState {
    pub x_smooth: Vector,
    pub v_smooth: Matrix,
    /// `Cov(x_t, x_{t-1} | y_{0..T-1})`; for `t = 0` the predecessor is the
    /// initial state described by `x0`, `v0`.
    pub v_lag: Matrix,
}

/// Output of the RTS smoother, including the smoothed initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoothed {
    pub initial_mean: Vector,
    pub initial_cov: Matrix,
    pub states: Vec<SmoothedState>,
}

/// `V_filt F^T V_pred^{-1}` without forming the inverse.
fn smoother_gain(f: &Matrix, v_filt: &Matrix, v_pred_next: &Matrix) -> Matrix {
    let rhs = f * v_filt;
    let solved = match spd_solve(v_pred_next, &rhs) {
        Some((x, _)) => x,
        None => pinv_unchecked(v_pred_next.as_view(), DEFAULT_RANK_TOLERANCE) * rhs,
    };
    solved.transpose()
}

/// Rauch-Tung-Striebel smoother over a full-retention filter trajectory.
pub fn rts_smooth(model: &LinearGaussianSsm, states: &[FilterState]) -> Result<Smoothed> {
    let n = states.len();
    if n == 0 {
        return Err(Error::InvalidInput("cannot smooth an empty trajectory".into()));
    }
    let covs = states
        .iter()
        .map(FilterState::covariances)
        .collect::<Result<Vec<_>>>()?;
    let f = &model.f;

    let mut x_s = vec![Vector::zeros(0); n];
    let mut v_s = vec![Matrix::zeros(0, 0); n];
    let mut gains = vec![Matrix::zeros(0, 0); n];
    x_s[n - 1] = states[n - 1].x_filt.clone();
    v_s[n - 1] = covs[n - 1].v_filt.clone();

    for t in (0..n - 1).rev() {
        let j = smoother_gain(f, &covs[t].v_filt, &covs[t + 1].v_pred);
        let x = &states[t].x_filt + &j * (&x_s[t + 1] - &states[t + 1].x_pred);
        let mut v = &covs[t].v_filt + &j * (&v_s[t + 1] - &covs[t + 1].v_pred) * j.transpose();
        symmetrize_in_place(&mut v);
        x_s[t] = x;
        v_s[t] = v;
        gains[t] = j;
    }

    let j0 = smoother_gain(f, &model.v0, &covs[0].v_pred);
    let initial_mean = &model.x0 + &j0 * (&x_s[0] - &states[0].x_pred);
    let mut initial_cov = &model.v0 + &j0 * (&v_s[0] - &covs[0].v_pred) * j0.transpose();
    symmetrize_in_place(&mut initial_cov);

    let smoothed = (0..n)
        .map(|t| {
            let prev_gain = if t == 0 { &j0 } else { &gains[t - 1] };
            SmoothedState {
                x_smooth: x_s[t].clone(),
                v_smooth: v_s[t].clone(),
                v_lag: &v_s[t] * prev_gain.transpose(),
            }
        })
        .collect();

    Ok(Smoothed {
        initial_mean,
        initial_cov,
        states: smoothed,
    })
}

/// Observation log-likelihood of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    /// At least one innovation covariance was singular and the
    /// pseudo-determinant was used.
    pub pseudo_determinant: bool,
}

/// `sum_t log N(y_t; H x_{t|t-1}, H V_{t|t-1} H^T + R)`.
pub fn log_likelihood<'a>(model: &LinearGaussianSsm, observations: impl Into<Observations<'a>>) -> Result<LogLikelihood> {
    let states = kf_run_with(model, observations.into(), Retention::MeansOnly)?;
    Ok(LogLikelihood {
        value: states.iter().map(|s| s.log_likelihood).sum(),
        pseudo_determinant: states.iter().any(|s| s.singular_innovation),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_model(f: f64, q: f64, r: f64) -> LinearGaussianSsm {
        LinearGaussianSsm::new(
            Matrix::from_element(1, 1, f),
            Matrix::identity(1, 1),
            Matrix::from_element(1, 1, q),
            Matrix::from_element(1, 1, r),
            Vector::zeros(1),
            Matrix::identity(1, 1),
        )
        .unwrap()
    }

    fn oscillator_model() -> LinearGaussianSsm {
        LinearGaussianSsm::new(
            Matrix::from_row_slice(2, 2, &[1.0, 1.0, -0.5, 0.48]),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
            Matrix::identity(2, 2) * 0.04,
            Vector::from_vec(vec![6.0, 0.0]),
            Matrix::identity(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn predict_identity_dynamics_is_noop() {
        let model = LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
            Matrix::identity(2, 2),
            Vector::zeros(2),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let x = Vector::from_vec(vec![1.5, -2.0]);
        let v = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let (xp, vp) = kf_predict(&model, &x, &v).unwrap();
        assert_eq!(xp, x);
        assert_relative_eq!(vp, v, epsilon = 1e-15);
    }

    #[test]
    fn predict_with_oscillator_transition() {
        let model = oscillator_model();
        let (xp, _) = kf_predict(&model, &Vector::from_vec(vec![5.0, 0.0]), &Matrix::identity(2, 2)).unwrap();
        assert_relative_eq!(xp, Vector::from_vec(vec![5.0, -2.5]), epsilon = 1e-15);
    }

    #[test]
    fn predict_with_zero_transition_returns_noise() {
        let q = Matrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.2]);
        let model = LinearGaussianSsm::new(
            Matrix::zeros(2, 2),
            Matrix::identity(2, 2),
            q.clone(),
            Matrix::identity(2, 2),
            Vector::zeros(2),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let (xp, vp) = kf_predict(&model, &Vector::from_vec(vec![3.0, 4.0]), &(Matrix::identity(2, 2) * 7.0)).unwrap();
        assert_eq!(xp, Vector::zeros(2));
        assert_relative_eq!(vp, q, epsilon = 1e-15);
        assert!(kf_predict(&model, &Vector::zeros(3), &Matrix::identity(2, 2)).is_err());
    }

    #[test]
    fn scalar_update_by_hand() {
        let model = scalar_model(1.0, 0.0, 1.0);
        let s = kf_update(&model, 0, &Vector::zeros(1), &Matrix::identity(1, 1), &Vector::from_element(1, 2.0)).unwrap();
        let cov = s.cov.unwrap();
        assert_relative_eq!(cov.gain[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.x_filt[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(cov.v_filt[(0, 0)], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn perfect_observation_limit() {
        let model = LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
            Matrix::identity(2, 2) * 1e-12,
            Vector::zeros(2),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let y = Vector::from_vec(vec![3.0, -1.0]);
        let s = kf_update(&model, 0, &Vector::zeros(2), &Matrix::identity(2, 2), &y).unwrap();
        assert_relative_eq!(s.x_filt, y, epsilon = 1e-9);
    }

    #[test]
    fn zero_innovation_keeps_prediction() {
        let model = oscillator_model();
        let x_pred = Vector::from_vec(vec![1.0, 2.0]);
        let s = kf_update(&model, 0, &x_pred, &Matrix::identity(2, 2), &x_pred).unwrap();
        assert_relative_eq!(s.x_filt, x_pred, epsilon = 1e-15);
    }

    #[test]
    fn update_rejects_non_finite() {
        let model = scalar_model(1.0, 0.0, 1.0);
        let y = Vector::from_element(1, f64::INFINITY);
        assert!(matches!(
            kf_update(&model, 0, &Vector::zeros(1), &Matrix::identity(1, 1), &y),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn run_constant_observation_noiseless() {
        let model = LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 2),
            Vector::zeros(2),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let y = Vector::from_vec(vec![4.0, -3.0]);
        let obs = vec![y.clone(); 6];
        for s in kf_run(&model, &obs).unwrap() {
            assert_relative_eq!(s.x_filt, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn run_reports_failing_step() {
        let model = scalar_model(1.0, 0.1, 1.0);
        let obs = vec![Vector::from_element(1, 1.0), Vector::from_element(1, f64::NAN)];
        match kf_run(&model, &obs) {
            Err(Error::AtStep { t, .. }) => assert_eq!(t, 1),
            other => panic!("expected step error, got {other:?}"),
        }
        assert!(kf_run(&model, &Vec::<Vector>::new()).is_err());
    }

    #[test]
    fn missing_observation_propagates_prediction() {
        let model = scalar_model(0.9, 0.1, 1.0);
        let obs = vec![Vector::from_element(1, 1.0), Vector::from_element(1, 99.0), Vector::from_element(1, 1.0)];
        let mask = [false, true, false];
        let states = kf_run(&model, Observations::with_missing(&obs, &mask).unwrap()).unwrap();
        assert!(states[1].missing);
        assert_eq!(states[1].x_filt, states[1].x_pred);
        let cov = states[1].cov.as_ref().unwrap();
        assert_eq!(cov.v_filt, cov.v_pred);
    }

    #[test]
    fn smoother_boundary_and_static_system() {
        let model = LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Matrix::zeros(2, 2),
            Matrix::identity(2, 2) * 0.5,
            Vector::zeros(2),
            Matrix::identity(2, 2),
        )
        .unwrap();
        let obs: Vec<Vector> = (0..5).map(|t| Vector::from_vec(vec![t as f64, 1.0 - t as f64])).collect();
        let states = kf_run(&model, &obs).unwrap();
        let smoothed = rts_smooth(&model, &states).unwrap();
        let last = states.len() - 1;
        assert_eq!(smoothed.states[last].x_smooth, states[last].x_filt);
        // Static state with no process noise: the smoothed value is the
        // final filtered value everywhere.
        for s in &smoothed.states {
            assert_relative_eq!(s.x_smooth, states[last].x_filt, epsilon = 1e-10);
        }
        assert!(rts_smooth(&model, &[]).is_err());
    }

    #[test]
    fn smoother_requires_covariances() {
        let model = scalar_model(1.0, 0.1, 1.0);
        let obs = vec![Vector::from_element(1, 1.0); 3];
        let states = kf_run_with(&model, Observations::new(&obs), Retention::MeansOnly).unwrap();
        assert!(rts_smooth(&model, &states).is_err());
    }

    #[test]
    fn log_likelihood_of_standard_normal_at_zero() {
        // x0 = 0, V0 = 0, F = 0, Q = 0, R = 1: y_0 ~ N(0, 1).
        let model = LinearGaussianSsm::new(
            Matrix::zeros(1, 1),
            Matrix::identity(1, 1),
            Matrix::zeros(1, 1),
            Matrix::identity(1, 1),
            Vector::zeros(1),
            Matrix::zeros(1, 1),
        )
        .unwrap();
        let ll = log_likelihood(&model, &vec![Vector::zeros(1)]).unwrap();
        assert_relative_eq!(ll.value, -0.5 * (2.0 * PI).ln(), epsilon = 1e-14);
        assert!(!ll.pseudo_determinant);
    }

    #[test]
    fn inflated_noise_lowers_likelihood() {
        let model = scalar_model(0.9, 0.1, 0.1);
        let obs: Vec<Vector> = (0..20).map(|t| Vector::from_element(1, 0.9f64.powi(t))).collect();
        let base = log_likelihood(&model, &obs).unwrap().value;
        let mut wide = model.clone();
        wide.r *= 1e6;
        let wide = LinearGaussianSsm::new(wide.f, wide.h, wide.q, wide.r, wide.x0, wide.v0).unwrap();
        assert!(log_likelihood(&wide, &obs).unwrap().value < base);
    }

    #[test]
    fn singular_innovation_uses_pseudo_determinant() {
        let model = LinearGaussianSsm::new(
            Matrix::zeros(1, 1),
            Matrix::from_row_slice(2, 1, &[1.0, 1.0]),
            Matrix::zeros(1, 1),
            Matrix::zeros(2, 2),
            Vector::zeros(1),
            Matrix::identity(1, 1),
        )
        .unwrap();
        let ll = log_likelihood(&model, &vec![Vector::zeros(2)]).unwrap();
        assert!(ll.pseudo_determinant);
        assert!(ll.value.is_finite());
    }

    #[test]
    fn model_validation() {
        let bad_q = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            bad_q,
            Matrix::identity(2, 2),
            Vector::zeros(2),
            Matrix::identity(2, 2)
        )
        .is_err());
        assert!(LinearGaussianSsm::new(
            Matrix::identity(2, 2),
            Matrix::identity(3, 3),
            Matrix::identity(2, 2),
            Matrix::identity(3, 3),
            Vector::zeros(2),
            Matrix::identity(2, 2)
        )
        .is_err());
    }
}
