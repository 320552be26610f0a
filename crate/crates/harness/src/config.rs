//! Experiment configuration files.
//!
//! A config is a TOML document. Only `experiment` is required; every other
//! key falls back to the defaults of that experiment.
//!
//! ```toml
//! experiment = "global-flow"
//! methods = ["kf", "llock"]
//! seeds = [0, 1, 2]        # or: seed_count = 100
//! steps = 250
//! snapshots = false
//! object_density = 0.08
//!
//! [params]
//! tau = 50
//! eta = 0.8
//! c = 1.0
//! d = 1
//! iterations = 5
//!
//! [prediction]
//! cutoff = 200
//! horizon = 20
//!
//! [oscillation]
//! truth_x0 = [5.0, 0.0]
//! filter_x0 = [6.0, 0.0]
//! f0_sd = 1.0
//!
//! [sweep]
//! method = "llock"
//! eta = [0.2, 0.4, 0.6, 0.8, 1.0]
//! c = [0.25, 0.5, 1.0, 2.0]
//! d = [1, 2]
//! tau = [25, 50, 100]
//! ```

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "dom-1")]
    Dom1,
    #[serde(rename = "dom-2")]
    Dom2,
    #[serde(rename = "dom-3")]
    Dom3,
    #[serde(rename = "dom-4")]
    Dom4,
    #[serde(rename = "dom-5")]
    Dom5,
    #[serde(rename = "object-moving")]
    ObjectMoving,
    #[serde(rename = "global-flow")]
    GlobalFlow,
    #[serde(rename = "local-stationary")]
    LocalStationary,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Dom1,
        ExperimentKind::Dom2,
        ExperimentKind::Dom3,
        ExperimentKind::Dom4,
        ExperimentKind::Dom5,
        ExperimentKind::ObjectMoving,
        ExperimentKind::GlobalFlow,
        ExperimentKind::LocalStationary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Dom1 => "dom-1",
            ExperimentKind::Dom2 => "dom-2",
            ExperimentKind::Dom3 => "dom-3",
            ExperimentKind::Dom4 => "dom-4",
            ExperimentKind::Dom5 => "dom-5",
            ExperimentKind::ObjectMoving => "object-moving",
            ExperimentKind::GlobalFlow => "global-flow",
            ExperimentKind::LocalStationary => "local-stationary",
        }
    }

    /// Damped-oscillation experiments.
    pub fn is_oscillation(self) -> bool {
        matches!(
            self,
            ExperimentKind::Dom1 | ExperimentKind::Dom2 | ExperimentKind::Dom3 | ExperimentKind::Dom4 | ExperimentKind::Dom5
        )
    }

    /// Time-varying oscillator coefficients.
    pub fn is_time_variant(self) -> bool {
        matches!(self, ExperimentKind::Dom3 | ExperimentKind::Dom4 | ExperimentKind::Dom5)
    }

    /// Standard deviation of the initial transition perturbation.
    pub fn default_f0_sd(self) -> f64 {
        match self {
            ExperimentKind::Dom2 | ExperimentKind::Dom4 => 1.0,
            ExperimentKind::Dom5 => 0.01,
            _ => 0.0,
        }
    }

    pub fn default_methods(self) -> Vec<Method> {
        match self {
            k if k.is_oscillation() => vec![Method::Lock, Method::Emkf],
            ExperimentKind::ObjectMoving => vec![Method::Kf, Method::Slock],
            _ => vec![Method::Kf, Method::Llock],
        }
    }

    pub fn default_params(self) -> Params {
        match self {
            ExperimentKind::Dom1 | ExperimentKind::Dom2 => Params::new(4, 0.6, 0.5, 1, 5),
            ExperimentKind::Dom3 | ExperimentKind::Dom4 | ExperimentKind::Dom5 => Params::new(4, 0.8, 0.5, 1, 5),
            ExperimentKind::ObjectMoving => Params::new(1, 1.0, 1.0, 1, 5),
            ExperimentKind::GlobalFlow => Params::new(50, 0.8, 1.0, 1, 5),
            ExperimentKind::LocalStationary => Params::new(50, 0.6, 1.0, 1, 5),
        }
    }

    pub fn default_prediction(self) -> Option<Prediction> {
        match self {
            ExperimentKind::GlobalFlow => Some(Prediction { cutoff: 200, horizon: 20 }),
            ExperimentKind::LocalStationary => Some(Prediction { cutoff: 500, horizon: 20 }),
            _ => None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation("experiment", format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kf,
    Emkf,
    Lock,
    Llock,
    Slock,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kf => "kf",
            Method::Emkf => "emkf",
            Method::Lock => "lock",
            Method::Llock => "llock",
            Method::Slock => "slock",
        }
    }

    /// Methods that need a spatial grid.
    pub fn needs_grid(self) -> bool {
        matches!(self, Method::Llock | Method::Slock)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Method::Kf, Method::Emkf, Method::Lock, Method::Llock, Method::Slock]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::validation("method", format!("unknown method {s:?}")))
    }
}

/// Method hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub tau: usize,
    pub eta: f64,
    pub c: f64,
    pub d: usize,
    pub iterations: usize,
}

impl Params {
    pub fn new(tau: usize, eta: f64, c: f64, d: usize, iterations: usize) -> Self {
        Self {
            tau,
            eta,
            c,
            d,
            iterations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::validation("tau", "update interval must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::validation("eta", format!("{} is outside [0, 1]", self.eta)));
        }
        if self.c.is_nan() || self.c <= 0.0 {
            return Err(Error::validation("c", format!("{} is not positive", self.c)));
        }
        if self.iterations == 0 {
            return Err(Error::validation("iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub cutoff: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationSettings {
    /// State at time 0 of the simulated truth.
    pub truth_x0: [f64; 2],
    /// Prior mean of the filter.
    pub filter_x0: [f64; 2],
    /// Entrywise standard deviation of the initial transition around the
    /// true one.
    pub f0_sd: f64,
}

/// Parameter grid for sweeps; each axis defaults to a single value, the
/// experiment's own parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub method: Method,
    pub tau: Vec<usize>,
    pub eta: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<usize>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.tau.len() * self.eta.len() * self.c.len() * self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in `tau`, `eta`, `c`, `d` nesting order.
    pub fn points(&self, base: Params) -> Vec<Params> {
        let mut out = Vec::with_capacity(self.len());
        for &tau in &self.tau {
            for &eta in &self.eta {
                for &c in &self.c {
                    for &d in &self.d {
                        out.push(Params { tau, eta, c, d, ..base });
                    }
                }
            }
        }
        out
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub params: Params,
    pub prediction: Option<Prediction>,
    /// Write operator estimates at every update.
    pub snapshots: bool,
    /// Expected object coverage for the flow datasets.
    pub object_density: f64,
    pub oscillation: Option<OscillationSettings>,
    pub sweep: Option<SweepGrid>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    tau: Option<usize>,
    eta: Option<f64>,
    c: Option<f64>,
    d: Option<usize>,
    iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOscillation {
    truth_x0: Option<[f64; 2]>,
    filter_x0: Option<[f64; 2]>,
    f0_sd: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    method: Option<Method>,
    tau: Option<Vec<usize>>,
    eta: Option<Vec<f64>>,
    c: Option<Vec<f64>>,
    d: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: ExperimentKind,
    methods: Option<Vec<Method>>,
    seeds: Option<Vec<u64>>,
    seed_count: Option<u64>,
    steps: Option<usize>,
    snapshots: Option<bool>,
    object_density: Option<f64>,
    #[serde(default)]
    params: RawParams,
    prediction: Option<Prediction>,
    oscillation: Option<RawOscillation>,
    sweep: Option<RawSweep>,
}

fn default_steps(kind: ExperimentKind) -> usize {
    match kind {
        ExperimentKind::ObjectMoving => 100,
        ExperimentKind::GlobalFlow => 250,
        ExperimentKind::LocalStationary => 1000,
        _ => 100,
    }
}

impl ExperimentConfig {
    /// Defaults of an experiment with a single seed 0.
    pub fn defaults(kind: ExperimentKind) -> Self {
        Self {
            experiment: kind,
            methods: kind.default_methods(),
            seeds: vec![0],
            steps: default_steps(kind),
            params: kind.default_params(),
            prediction: kind.default_prediction(),
            snapshots: kind.is_oscillation(),
            object_density: 0.08,
            oscillation: kind.is_oscillation().then(|| OscillationSettings {
                truth_x0: [5.0, 0.0],
                filter_x0: [6.0, 0.0],
                f0_sd: kind.default_f0_sd(),
            }),
            sweep: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let mut cfg = Self::defaults(raw.experiment);
        if let Some(methods) = raw.methods {
            cfg.methods = methods;
        }
        match (raw.seeds, raw.seed_count) {
            (Some(_), Some(_)) => return Err(Error::validation("seeds", "give either seeds or seed_count")),
            (Some(seeds), None) => cfg.seeds = seeds,
            (None, Some(n)) => cfg.seeds = (0..n).collect(),
            (None, None) => {}
        }
        if let Some(steps) = raw.steps {
            cfg.steps = steps;
        }
        if let Some(s) = raw.snapshots {
            cfg.snapshots = s;
        }
        if let Some(density) = raw.object_density {
            cfg.object_density = density;
        }
        let p = raw.params;
        cfg.params = Params {
            tau: p.tau.unwrap_or(cfg.params.tau),
            eta: p.eta.unwrap_or(cfg.params.eta),
            c: p.c.unwrap_or(cfg.params.c),
            d: p.d.unwrap_or(cfg.params.d),
            iterations: p.iterations.unwrap_or(cfg.params.iterations),
        };
        if raw.prediction.is_some() {
            cfg.prediction = raw.prediction;
        }
        if let Some(o) = raw.oscillation {
            let Some(current) = cfg.oscillation.as_mut() else {
                return Err(Error::validation("oscillation", "only applies to dom experiments"));
            };
            if let Some(x) = o.truth_x0 {
                current.truth_x0 = x;
            }
            if let Some(x) = o.filter_x0 {
                current.filter_x0 = x;
            }
            if let Some(sd) = o.f0_sd {
                current.f0_sd = sd;
            }
        }
        if let Some(s) = raw.sweep {
            let base = cfg.params;
            let method = match s.method {
                Some(m) => m,
                None => cfg.primary_method()?,
            };
            cfg.sweep = Some(SweepGrid {
                method,
                tau: s.tau.unwrap_or_else(|| vec![base.tau]),
                eta: s.eta.unwrap_or_else(|| vec![base.eta]),
                c: s.c.unwrap_or_else(|| vec![base.c]),
                d: s.d.unwrap_or_else(|| vec![base.d]),
            });
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path).map_err(Error::io(path))?)
    }

    /// The first method that estimates the transition.
    pub fn primary_method(&self) -> Result<Method> {
        self.methods
            .iter()
            .copied()
            .find(|&m| m != Method::Kf)
            .ok_or_else(|| Error::validation("methods", "no transition-estimating method listed"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::validation("methods", "at least one method is required"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("seeds", "at least one seed is required"));
        }
        if self.steps < 2 {
            return Err(Error::validation("steps", "at least two steps are required"));
        }
        self.params.validate()?;
        if self.experiment.is_oscillation() {
            if let Some(m) = self.methods.iter().find(|m| m.needs_grid()) {
                return Err(Error::validation("methods", format!("{m} needs an image experiment")));
            }
        }
        if !(0.0..=1.0).contains(&self.object_density) {
            return Err(Error::validation("object_density", "must lie in [0, 1]"));
        }
        if let Some(p) = self.prediction {
            if p.horizon == 0 || p.cutoff + p.horizon >= self.steps {
                return Err(Error::validation(
                    "prediction",
                    format!("cutoff + horizon must be below steps = {}", self.steps),
                ));
            }
        }
        if let Some(o) = &self.oscillation {
            if o.f0_sd.is_nan() || o.f0_sd < 0.0 {
                return Err(Error::validation("oscillation.f0_sd", "must be non-negative"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.is_empty() {
                return Err(Error::validation("sweep", "parameter grid is empty"));
            }
            if s.method == Method::Kf {
                return Err(Error::validation("sweep.method", "kf has no parameters to sweep"));
            }
            for p in s.points(self.params) {
                p.validate().map_err(|e| match e {
                    Error::Validation { field, message } => Error::validation(format!("sweep.{field}"), message),
                    e => e,
                })?;
            }
        }
        Ok(())
    }

    /// TOML text that resolves back to this config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is representable as TOML")
    }
}
