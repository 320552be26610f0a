//! Brute-force reference computations by dense Gaussian conditioning.
//!
//! The states `x_{-1}, x_0, ..., x_{T-1}` and the observations are stacked
//! into one joint Gaussian whose moments are built directly from the model
//! equations, without any recursion shared with the filter.

use crate::kalman::LinearGaussianSsm;
use crate::linalg::{pinv_unchecked, Matrix, Vector};

/// Joint moments of the stacked states (initial state first) and stacked
/// observations.
pub struct JointGaussian {
    pub m: usize,
    pub l: usize,
    pub steps: usize,
    pub state_mean: Vector,
    pub state_cov: Matrix,
    pub obs_mean: Vector,
    pub obs_cov: Matrix,
    /// `Cov(states, observations)`
    pub cross: Matrix,
}

pub fn joint(model: &LinearGaussianSsm, steps: usize) -> JointGaussian {
    let m = model.state_dim();
    let l = model.obs_dim();
    let n = steps + 1;
    let f = &model.f;

    let mut powers = vec![Matrix::identity(m, m)];
    for k in 1..n {
        powers.push(f * &powers[k - 1]);
    }
    let mut marginal = vec![model.v0.clone()];
    let mut means = vec![model.x0.clone()];
    for k in 1..n {
        marginal.push(f * &marginal[k - 1] * f.transpose() + &model.q);
        means.push(f * &means[k - 1]);
    }

    let mut state_mean = Vector::zeros(n * m);
    let mut state_cov = Matrix::zeros(n * m, n * m);
    for a in 0..n {
        state_mean.rows_mut(a * m, m).copy_from(&means[a]);
        for b in 0..n {
            // Cov(x_a, x_b) = F^{a-b} Sigma_b for a >= b.
            let block = if a >= b {
                &powers[a - b] * &marginal[b]
            } else {
                &marginal[a] * powers[b - a].transpose()
            };
            state_cov.view_mut((a * m, b * m), (m, m)).copy_from(&block);
        }
    }

    // Observations see states 1..n of the stack.
    let mut h_big = Matrix::zeros(steps * l, n * m);
    let mut r_big = Matrix::zeros(steps * l, steps * l);
    for t in 0..steps {
        h_big.view_mut((t * l, (t + 1) * m), (l, m)).copy_from(&model.h);
        r_big.view_mut((t * l, t * l), (l, l)).copy_from(&model.r);
    }
    let obs_mean = &h_big * &state_mean;
    let cross = &state_cov * h_big.transpose();
    let obs_cov = &h_big * &cross + r_big;
    JointGaussian {
        m,
        l,
        steps,
        state_mean,
        state_cov,
        obs_mean,
        obs_cov,
        cross,
    }
}

/// Posterior over the stacked states given the first `upto` observations.
pub struct Posterior {
    pub m: usize,
    pub mean: Vector,
    pub cov: Matrix,
}

impl Posterior {
    /// Mean of `x_t`; `t = -1` is the initial state.
    pub fn state_mean(&self, t: isize) -> Vector {
        let a = (t + 1) as usize;
        self.mean.rows(a * self.m, self.m).into_owned()
    }

    pub fn state_cov(&self, s: isize, t: isize) -> Matrix {
        let (a, b) = ((s + 1) as usize, (t + 1) as usize);
        self.cov.view((a * self.m, b * self.m), (self.m, self.m)).into_owned()
    }

    /// `E[x_t x_{t-1}^T | y]`.
    pub fn lag_moment(&self, t: isize) -> Matrix {
        self.state_cov(t, t - 1) + self.state_mean(t) * self.state_mean(t - 1).transpose()
    }

    /// `E[x_t x_t^T | y]`.
    pub fn second_moment(&self, t: isize) -> Matrix {
        self.state_cov(t, t) + self.state_mean(t) * self.state_mean(t).transpose()
    }
}

pub fn condition(j: &JointGaussian, obs: &[Vector], upto: usize) -> Posterior {
    let k = upto * j.l;
    let y = Vector::from_iterator(k, obs[..upto].iter().flat_map(|v| v.iter().copied()));
    let s = j.obs_cov.view((0, 0), (k, k)).into_owned();
    let c = j.cross.columns(0, k).into_owned();
    let s_inv = pinv_unchecked(s.as_view(), 1e-14);
    let gain = &c * s_inv;
    let mean = &j.state_mean + &gain * (y - j.obs_mean.rows(0, k));
    let cov = &j.state_cov - &gain * c.transpose();
    Posterior { m: j.m, mean, cov }
}

/// `E[x_t | y_0..y_t]` for every `t`.
pub fn filtered_means(model: &LinearGaussianSsm, obs: &[Vector]) -> Vec<Vector> {
    let j = joint(model, obs.len());
    (0..obs.len())
        .map(|t| condition(&j, obs, t + 1).state_mean(t as isize))
        .collect()
}

/// Posterior given every observation.
pub fn smoothed(model: &LinearGaussianSsm, obs: &[Vector]) -> Posterior {
    let j = joint(model, obs.len());
    condition(&j, obs, obs.len())
}

/// Log-density of the stacked observation vector.
pub fn log_density(model: &LinearGaussianSsm, obs: &[Vector]) -> f64 {
    let j = joint(model, obs.len());
    let n = obs.len() * j.l;
    let y = Vector::from_iterator(n, obs.iter().flat_map(|v| v.iter().copied()));
    let e = y - &j.obs_mean;
    let chol = j.obs_cov.clone().cholesky().expect("observation covariance is positive definite");
    let log_det = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + e.dot(&chol.solve(&e)))
}
