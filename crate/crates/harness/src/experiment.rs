//! Datasets, model construction and per-seed method runs.

use std::time::Instant;

use lock_core::datagen::{
    data_rng, gen_damped_oscillation, gen_global_flow, gen_local_stationary_flow, gen_object_moving,
    true_transition, Coefficient, DampedOscillationParams, GlobalFlowParams, LocalFlowParams, ObjectMovingParams,
};
use lock_core::metrics::{prediction_rmse, rmse_series, support_errors, MetricSeries, PredictionRmse, SupportErrors};
use lock_core::{
    build_adjacency, build_parameter_map, emkf_run_with, llock_run_with, lock_run_with, run_online, slock_run_with,
    EmkfConfig, FrameSequence, GridSpec, LinearGaussianSsm, LockConfig, Matrix, Observations, Operator, Retention,
    RunOutput, SparseMatrix, Vector,
};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, Method, Params};
use crate::error::{Error, Result};

/// Observation noise of every image experiment model and of the oscillator.
const MODEL_NOISE_VARIANCE: f64 = 0.2 * 0.2;

/// A generated sequence with the model the filters start from.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub seq: FrameSequence,
    pub model: LinearGaussianSsm,
}

impl Dataset {
    pub fn grid(&self) -> Option<GridSpec> {
        self.seq.grid
    }
}

pub fn oscillation_params(cfg: &ExperimentConfig) -> Option<DampedOscillationParams> {
    let o = cfg.oscillation.as_ref()?;
    let (k, r) = if cfg.experiment.is_time_variant() {
        (
            Coefficient::Linear { start: 0.35, end: 0.65 },
            Coefficient::Linear { start: 0.67, end: 0.37 },
        )
    } else {
        (Coefficient::Constant(0.5), Coefficient::Constant(0.52))
    };
    Some(DampedOscillationParams {
        k,
        r,
        x0: Vector::from_row_slice(&o.truth_x0),
        steps: cfg.steps,
        ..Default::default()
    })
}

/// Truth at time 0 plus the configured entrywise Gaussian perturbation. The
/// perturbation uses stream 1 of the seed's generator so the data stream is
/// unaffected.
fn initial_transition(params: &DampedOscillationParams, f0_sd: f64, seed: u64) -> Result<Matrix> {
    let mut f = true_transition(params, 0.0)?;
    if f0_sd > 0.0 {
        let mut rng = data_rng(seed);
        rng.set_stream(1);
        f.iter_mut().for_each(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += f0_sd * z;
        });
    }
    Ok(f)
}

pub fn build_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    if let Some(params) = oscillation_params(cfg) {
        let o = cfg.oscillation.as_ref().expect("oscillation settings");
        let seq = gen_damped_oscillation(&params, seed)?;
        let dt_over_m = params.dt / params.mass;
        let q = Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, dt_over_m * dt_over_m]) * (0.01 * 0.01);
        let model = LinearGaussianSsm::new(
            initial_transition(&params, o.f0_sd, seed)?,
            Matrix::identity(2, 2),
            q,
            Matrix::identity(2, 2) * MODEL_NOISE_VARIANCE,
            Vector::from_row_slice(&o.filter_x0),
            Matrix::identity(2, 2),
        )?;
        return Ok(Dataset { seq, model });
    }
    let seq = match cfg.experiment {
        ExperimentKind::ObjectMoving => gen_object_moving(
            &ObjectMovingParams {
                steps: cfg.steps,
                ..Default::default()
            },
            seed,
        )?,
        ExperimentKind::GlobalFlow => gen_global_flow(
            &GlobalFlowParams {
                steps: cfg.steps,
                object_density: cfg.object_density,
                ..Default::default()
            },
            seed,
        )?,
        ExperimentKind::LocalStationary => gen_local_stationary_flow(
            &LocalFlowParams {
                steps: cfg.steps,
                object_density: cfg.object_density,
                ..Default::default()
            },
            seed,
        )?,
        _ => unreachable!("oscillation experiments handled above"),
    };
    let model = image_model(seq.dim(), seq.observed[0].clone())?;
    Ok(Dataset { seq, model })
}

/// `F0 = H = V0 = I`, `Q = R = 0.2^2 I`, prior mean at the first frame.
pub fn image_model(l: usize, x0: Vector) -> Result<LinearGaussianSsm> {
    let eye = Matrix::identity(l, l);
    Ok(LinearGaussianSsm::new(
        eye.clone(),
        eye.clone(),
        &eye * MODEL_NOISE_VARIANCE,
        &eye * MODEL_NOISE_VARIANCE,
        x0,
        eye,
    )?)
}

/// One operator of a run: the initial one (`t = None`) or an update.
#[derive(Debug, Clone)]
pub struct OperatorRecord {
    pub t: Option<usize>,
    /// Kept when snapshots are enabled.
    pub operator: Option<Operator>,
    /// Error against the true transition it is used for, over the method's
    /// support.
    pub errors: Option<SupportErrors>,
    pub log_likelihoods: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MethodResult {
    pub method: Method,
    pub params: Params,
    pub estimates: Vec<Vector>,
    pub state_rmse: MetricSeries,
    pub operators: Vec<OperatorRecord>,
    pub prediction: Option<PredictionRmse>,
    pub seconds: f64,
}

impl MethodResult {
    pub fn mean_rmse(&self) -> f64 {
        self.state_rmse.mean().expect("non-empty series")
    }

    pub fn initial_error(&self) -> Option<SupportErrors> {
        self.operators.first().and_then(|r| r.errors)
    }

    pub fn final_error(&self) -> Option<SupportErrors> {
        self.operators.last().and_then(|r| r.errors)
    }

    /// Mean overall support error across updates; the initial operator only
    /// when there were no updates.
    pub fn mean_support_error(&self) -> Option<f64> {
        let updates: Vec<f64> = self
            .operators
            .iter()
            .filter(|r| r.t.is_some())
            .filter_map(|r| r.errors.map(|e| e.overall))
            .collect();
        if updates.is_empty() {
            return self.initial_error().map(|e| e.overall);
        }
        Some(updates.iter().sum::<f64>() / updates.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub observation_rmse: MetricSeries,
    pub methods: Vec<MethodResult>,
    /// Truth and observations, kept for vector (non-image) data.
    pub frames: Option<(Vec<Vector>, Vec<Vector>)>,
}

impl SeedResult {
    pub fn method(&self, m: Method) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }
}

/// Support on which operator errors are measured: the localization or
/// parameter map for the local methods, everything otherwise.
fn error_mask(method: Method, data: &Dataset, params: &Params) -> Option<SparseMatrix> {
    match (method, data.grid()) {
        (Method::Llock, Some(g)) => Some(build_adjacency(g, params.d).mask()),
        (Method::Slock, Some(g)) => Some(build_parameter_map(g, params.d).mask()),
        (Method::Kf, Some(_)) => None,
        _ => {
            let l = data.seq.dim();
            Some(SparseMatrix::from_dense(&Matrix::from_element(l, l, 1.0)))
        }
    }
}

fn execute(method: Method, data: &Dataset, params: &Params) -> Result<RunOutput> {
    let obs = Observations::new(&data.seq.observed);
    let lock_config = LockConfig::new(params.tau, params.eta, params.c)?;
    let needs_grid = || {
        data.grid()
            .ok_or_else(|| Error::validation("methods", format!("{method} needs an image experiment")))
    };
    let out = match method {
        Method::Kf => run_online(&data.model, obs, &lock_config, None, Retention::MeansOnly)?,
        Method::Lock => lock_run_with(&data.model, obs, &lock_config, Retention::MeansOnly)?,
        Method::Emkf => {
            let cfg = EmkfConfig::new(params.tau, params.iterations, params.eta, params.c)?;
            emkf_run_with(&data.model, obs, &cfg, Retention::MeansOnly)?
        }
        Method::Llock => {
            let l = build_adjacency(needs_grid()?, params.d);
            llock_run_with(&data.model, obs, &l, &lock_config, Retention::MeansOnly)?
        }
        Method::Slock => {
            let p = build_parameter_map(needs_grid()?, params.d);
            slock_run_with(&data.model, obs, &p, &lock_config, Retention::MeansOnly)?
        }
    };
    Ok(out)
}

pub fn run_method(cfg: &ExperimentConfig, data: &Dataset, method: Method, params: &Params) -> Result<MethodResult> {
    let started = Instant::now();
    let out = execute(method, data, params)?;
    let seconds = started.elapsed().as_secs_f64();
    let estimates = out.filtered_means();
    let state_rmse = rmse_series(method.name(), 0, &data.seq.truth, &estimates)?;

    let mask = error_mask(method, data, params);
    let steps = data.seq.len();
    // The operator in force after step t predicts frame t + 1.
    let errors_at = |t: usize, op: &Operator| -> Result<Option<SupportErrors>> {
        let (Some(mask), Some(truth)) = (&mask, data.seq.true_transition((t + 1).min(steps - 1))) else {
            return Ok(None);
        };
        Ok(Some(support_errors(&truth, op, mask)?))
    };
    let mut operators = vec![OperatorRecord {
        t: None,
        operator: cfg.snapshots.then(|| out.initial.clone()),
        errors: errors_at(0, &out.initial)?,
        log_likelihoods: Vec::new(),
    }];
    for u in &out.updates {
        operators.push(OperatorRecord {
            t: Some(u.t),
            operator: cfg.snapshots.then(|| u.operator.clone()),
            errors: errors_at(u.t, &u.operator)?,
            log_likelihoods: u.estimate.log_likelihoods.clone(),
        });
    }

    let prediction = match cfg.prediction {
        Some(p) => Some(prediction_rmse(
            &data.seq.truth,
            p.cutoff,
            p.horizon,
            &estimates[p.cutoff],
            out.operator_after(p.cutoff),
            &data.seq.observed[p.cutoff],
            method.name(),
        )?),
        None => None,
    };

    Ok(MethodResult {
        method,
        params: *params,
        estimates,
        state_rmse,
        operators,
        prediction,
        seconds,
    })
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedResult> {
    let data = build_dataset(cfg, seed)?;
    let observation_rmse = rmse_series("observation", 0, &data.seq.truth, &data.seq.observed)?;
    let methods = cfg
        .methods
        .iter()
        .map(|&m| run_method(cfg, &data, m, &cfg.params))
        .collect::<Result<_>>()?;
    let frames = data.grid().is_none().then_some((data.seq.truth, data.seq.observed));
    Ok(SeedResult {
        seed,
        observation_rmse,
        methods,
        frames,
    })
}

/// Every seed of the config, in seed order.
pub fn run_seeds(cfg: &ExperimentConfig) -> Result<Vec<SeedResult>> {
    cfg.validate()?;
    cfg.seeds.par_iter().map(|&s| run_seed(cfg, s)).collect()
}
