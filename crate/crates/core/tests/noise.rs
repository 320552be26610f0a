use lock_core::datagen::{
    gen_damped_oscillation, gen_global_flow, gen_object_moving, DampedOscillationParams, GlobalFlowParams,
    ObjectMovingParams,
};
use lock_core::{FrameSequence, GridSpec};
use statrs::distribution::{ContinuousCDF, Normal};

fn residuals(seq: &FrameSequence, scale: f64) -> Vec<f64> {
    seq.observed
        .iter()
        .zip(&seq.truth)
        .flat_map(|(y, x)| (y - x).iter().map(|v| v / scale).collect::<Vec<_>>())
        .collect()
}

/// Kolmogorov-Smirnov statistic of `sample` against `cdf`.
fn ks(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn oscillation_observation_noise_is_gaussian() {
    let params = DampedOscillationParams {
        steps: 50_000,
        ..Default::default()
    };
    let r = residuals(&gen_damped_oscillation(&params, 3).unwrap(), 0.2);
    assert_eq!(r.len(), 100_000);
    let std = Normal::standard();
    let d = ks(r, |x| std.cdf(x));
    assert!(d < 0.02, "KS statistic {d}");
}

#[test]
fn flow_observation_noise_is_gaussian() {
    let params = GlobalFlowParams {
        grid: GridSpec::square(10).unwrap(),
        steps: 1000,
        ..Default::default()
    };
    let r = residuals(&gen_global_flow(&params, 5).unwrap(), params.noise_sd);
    assert_eq!(r.len(), 100_000);
    let std = Normal::standard();
    let d = ks(r, |x| std.cdf(x));
    assert!(d < 0.02, "KS statistic {d}");
}

#[test]
fn object_moving_noise_is_half_normal() {
    let params = ObjectMovingParams {
        steps: 160,
        ..Default::default()
    };
    let r = residuals(&gen_object_moving(&params, 8).unwrap(), params.noise_sd);
    assert_eq!(r.len(), 100_000);
    assert!(r.iter().all(|&v| v >= 0.0));
    let std = Normal::standard();
    let d = ks(r, |x| 2.0 * std.cdf(x) - 1.0);
    assert!(d < 0.02, "KS statistic {d}");
}
