use std::fs;

use lock_harness::config::{ExperimentConfig, ExperimentKind, Method, SweepGrid};
use lock_harness::sweep::{run_sweep, sweep_csv};
use lock_harness::{run_experiment, Format};
use tempfile::tempdir;

fn singleton(cfg: &ExperimentConfig, method: Method) -> SweepGrid {
    let p = cfg.params;
    SweepGrid {
        method,
        tau: vec![p.tau],
        eta: vec![p.eta],
        c: vec![p.c],
        d: vec![p.d],
    }
}

fn aggregate_mean(text: &str, method: &str, metric: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0] == method && cols[1] == metric).then(|| cols[3].parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {method},{metric} row"))
}

#[test]
fn singleton_grid_equals_run_aggregate() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Dom2);
    cfg.seeds = vec![0, 1, 2, 3, 4];
    let rows = run_sweep(&cfg, &singleton(&cfg, Method::Lock)).unwrap();
    assert_eq!(rows.len(), 5);

    let dir = tempdir().unwrap();
    let results = run_experiment(&cfg, dir.path(), Format::Csv).unwrap();
    for (row, r) in rows.iter().zip(&results) {
        let m = r.method(Method::Lock).unwrap();
        assert_eq!(row.seed, r.seed);
        assert_eq!(row.rmse, m.mean_rmse());
        assert_eq!(row.srmse, m.mean_support_error());
    }
    let agg = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    let mean = rows.iter().map(|r| r.rmse).sum::<f64>() / rows.len() as f64;
    assert_eq!(aggregate_mean(&agg, "lock", "state_rmse_mean"), mean);
}

#[test]
fn row_count_is_grid_size_times_seeds() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Dom1);
    cfg.seeds = vec![3, 5, 8];
    let grid = SweepGrid {
        method: Method::Lock,
        tau: vec![4, 8],
        eta: vec![0.2, 0.6, 1.0],
        c: vec![0.5],
        d: vec![1],
    };
    let rows = run_sweep(&cfg, &grid).unwrap();
    assert_eq!(rows.len(), grid.len() * cfg.seeds.len());
    assert_eq!(sweep_csv(&rows).lines().count(), rows.len() + 1);
    assert_eq!(rows[0].seed, 3);
    assert_eq!(rows[1].seed, 5);
    assert_eq!(rows[3].params, rows[4].params);
}

#[test]
fn empty_grid_rejected() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::Dom1);
    let mut grid = singleton(&cfg, Method::Lock);
    grid.eta.clear();
    assert!(run_sweep(&cfg, &grid).is_err());
}

#[test]
fn hundred_seeds_give_hundred_trajectories() {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::Dom2);
    cfg.seeds = (0..100).collect();
    let dir = tempdir().unwrap();
    run_experiment(&cfg, dir.path(), Format::Csv).unwrap();
    let trajectories = (0..100)
        .filter(|s| dir.path().join(format!("seed-{s}/operators.csv")).exists())
        .count();
    assert_eq!(trajectories, 100);
    let quant = fs::read_to_string(dir.path().join("error_quantiles.csv")).unwrap();
    assert!(quant.lines().skip(1).all(|l| l.split(',').nth(2) == Some("100")));
}

#[test]
fn slock_is_robust_to_learning_rate() {
    let cfg = ExperimentConfig::defaults(ExperimentKind::ObjectMoving);
    let grid = SweepGrid {
        method: Method::Slock,
        tau: vec![1],
        eta: vec![0.2, 0.4, 0.6, 0.8, 1.0],
        c: vec![1.0],
        d: vec![1],
    };
    let rows = run_sweep(&cfg, &grid).unwrap();
    let rmse: Vec<f64> = rows.iter().map(|r| r.rmse).collect();
    let (lo, hi) = rmse.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi / lo < 1.5, "{rmse:?}");
}
