use rand_distr::{Distribution, StandardNormal};

use super::{data_rng, FrameSequence, TrueDynamics};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// A model coefficient, constant or linear in `t / T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `start * (1 - t/T) + end * t/T`
    Linear { start: f64, end: f64 },
}

impl Coefficient {
    pub fn at(&self, t: f64, horizon: f64) -> f64 {
        match *self {
            Coefficient::Constant(v) => v,
            Coefficient::Linear { start, end } => {
                let s = t / horizon;
                end * s + start * (1.0 - s)
            }
        }
    }
}

/// Damped oscillator discretized with step `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampedOscillationParams {
    pub dt: f64,
    pub mass: f64,
    pub k: Coefficient,
    pub r: Coefficient,
    /// State at time 0; the first frame is time 1.
    pub x0: Vector,
    pub steps: usize,
    pub system_noise_sd: f64,
    pub observation_noise_sd: f64,
}

impl Default for DampedOscillationParams {
    fn default() -> Self {
        Self {
            dt: 1.0,
            mass: 1.0,
            k: Coefficient::Constant(0.5),
            r: Coefficient::Constant(0.52),
            x0: Vector::from_vec(vec![5.0, 0.0]),
            steps: 100,
            system_noise_sd: 0.01,
            observation_noise_sd: 0.2,
        }
    }
}

impl DampedOscillationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.mass > 0.0) {
            return Err(Error::InvalidInput("dt and mass must be positive".into()));
        }
        if self.x0.len() != 2 {
            return Err(Error::DimensionMismatch("oscillator state has two components".into()));
        }
        if self.system_noise_sd < 0.0 || self.observation_noise_sd < 0.0 {
            return Err(Error::InvalidInput("noise standard deviations must be non-negative".into()));
        }
        Ok(())
    }
}

/// `[[1, dt], [-k dt / m, 1 - r dt / m]]` at time `t`.
pub fn true_transition(params: &DampedOscillationParams, t: f64) -> Result<Matrix> {
    params.validate()?;
    let horizon = params.steps.max(1) as f64;
    let k = params.k.at(t, horizon);
    let r = params.r.at(t, horizon);
    let (dt, m) = (params.dt, params.mass);
    Ok(Matrix::from_row_slice(2, 2, &[1.0, dt, -k * dt / m, 1.0 - r * dt / m]))
}

/// Frames are the states at times `1..=steps`, each
/// `x_t = F(t) x_{t-1} + v_t`, observed with additive Gaussian noise.
pub fn gen_damped_oscillation(params: &DampedOscillationParams, seed: u64) -> Result<FrameSequence> {
    params.validate()?;
    let mut rng = data_rng(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut x = params.x0.clone();
    let mut truth = Vec::with_capacity(params.steps);
    let mut observed = Vec::with_capacity(params.steps);
    for t in 1..=params.steps {
        let f = true_transition(params, t as f64)?;
        let v = Vector::from_fn(2, |_, _| params.system_noise_sd * normal());
        x = f * x + v;
        let w = Vector::from_fn(2, |_, _| params.observation_noise_sd * normal());
        observed.push(&x + w);
        truth.push(x.clone());
    }
    Ok(FrameSequence {
        grid: None,
        truth,
        observed,
        dynamics: Some(TrueDynamics::Oscillation(params.clone())),
    })
}
