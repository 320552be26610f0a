//! Timing and memory figures for one transition-matrix update.

use std::fmt::Write as _;
use std::time::Instant;

use lock_core::datagen::data_rng;
use lock_core::{
    build_adjacency, build_parameter_map, local_g, GridSpec, ObservationWindow, Operator, SlockEstimator, Vector,
};
use lock_core::{estimate_g, EstimationContext, TransitionEstimator};
use rand_distr::{Distribution, StandardNormal};

use crate::config::Method;
use crate::error::{Error, Result};
use crate::experiment::image_model;

const REPEATS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub side: usize,
    /// Observation dimension `l = side^2`.
    pub l: usize,
    pub method: Method,
    /// Median wall time of one update, estimate plus blend.
    pub seconds: f64,
    /// `l * N_l * 4` with `N_l = (2d + 1)^2`.
    pub ideal_bytes: usize,
    /// `l^2 * 4`.
    pub adhoc_bytes: usize,
}

pub fn memory_figures(l: usize, d: usize) -> (usize, usize) {
    let n_l = (2 * d + 1).pow(2).min(l);
    (l * n_l * 4, l * l * 4)
}

fn random_window(l: usize, tau: usize) -> ObservationWindow {
    let mut rng = data_rng(0);
    let mut w = ObservationWindow::new(tau);
    for _ in 0..=tau {
        w.push(Vector::from_fn(l, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            20.0 + 20.0 * z
        }));
    }
    w
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Times one update per grid side on a synthetic window of `tau + 1` frames.
pub fn run_bench(sides: &[usize], method: Method, d: usize, tau: usize, eta: f64, c: f64) -> Result<Vec<CostReport>> {
    if sides.is_empty() {
        return Err(Error::validation("sizes", "at least one size is required"));
    }
    if tau == 0 {
        return Err(Error::validation("tau", "update interval must be at least 1"));
    }
    let mut reports = Vec::with_capacity(sides.len());
    for &side in sides {
        let grid = GridSpec::square(side).map_err(|e| Error::validation("sizes", e.to_string()))?;
        let l = grid.len();
        let window = random_window(l, tau);
        let current = Operator::Sparse(lock_core::SparseMatrix::identity(l));
        let mut times = Vec::with_capacity(REPEATS);
        match method {
            Method::Llock => {
                let adjacency = build_adjacency(grid, d);
                for _ in 0..REPEATS {
                    let start = Instant::now();
                    let g = local_g(&adjacency, &window)?;
                    let _ = current.blend(&Operator::Sparse(g), eta, c)?;
                    times.push(start.elapsed().as_secs_f64());
                }
            }
            Method::Slock => {
                let mut est = SlockEstimator {
                    map: build_parameter_map(grid, d),
                };
                let model = image_model(l, window.frame(0).clone())?;
                for _ in 0..REPEATS {
                    let start = Instant::now();
                    let ctx = EstimationContext {
                        t: tau,
                        window: &window,
                        current: &current,
                        model: &model,
                        prior: None,
                    };
                    let e = est.estimate(&ctx)?;
                    let _ = current.blend(&e.f_hat, eta, c)?;
                    times.push(start.elapsed().as_secs_f64());
                }
            }
            Method::Lock => {
                for _ in 0..REPEATS {
                    let start = Instant::now();
                    let g = estimate_g(&window.y_now(), &window.y_prev())?;
                    let _ = current.blend(&Operator::Dense(g), eta, c)?;
                    times.push(start.elapsed().as_secs_f64());
                }
            }
            m => return Err(Error::validation("method", format!("{m} is not benchmarked"))),
        }
        let (ideal_bytes, adhoc_bytes) = memory_figures(l, d);
        reports.push(CostReport {
            side,
            l,
            method,
            seconds: median(times),
            ideal_bytes,
            adhoc_bytes,
        });
    }
    Ok(reports)
}

pub fn bench_csv(reports: &[CostReport]) -> String {
    let mut s = String::from("side,l,method,seconds,ideal_bytes,adhoc_bytes\n");
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.side, r.l, r.method, r.seconds, r.ideal_bytes, r.adhoc_bytes
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memory_example() {
        assert_eq!(memory_figures(100, 1), (3600, 40000));
        let (ideal, adhoc) = memory_figures(900, 1);
        assert!((ideal as f64) < 0.05 * adhoc as f64);
    }
}
