use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{data_rng, sparse_permutation_like, FrameSequence, TrueDynamics};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::Vector;
use crate::operator::SparseMatrix;

/// Per-step displacement of image content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Direction {
    pub d_row: isize,
    pub d_col: isize,
}

impl Direction {
    pub const STAY: Direction = Direction::new(0, 0);
    pub const UP: Direction = Direction::new(-1, 0);
    pub const DOWN: Direction = Direction::new(1, 0);
    pub const LEFT: Direction = Direction::new(0, -1);
    pub const RIGHT: Direction = Direction::new(0, 1);

    pub const fn new(d_row: isize, d_col: isize) -> Self {
        Self { d_row, d_col }
    }

    const NAMES: [(&'static str, Direction); 9] = [
        ("stay", Direction::new(0, 0)),
        ("up", Direction::new(-1, 0)),
        ("down", Direction::new(1, 0)),
        ("left", Direction::new(0, -1)),
        ("right", Direction::new(0, 1)),
        ("up-left", Direction::new(-1, -1)),
        ("up-right", Direction::new(-1, 1)),
        ("down-left", Direction::new(1, -1)),
        ("down-right", Direction::new(1, 1)),
    ];
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match Self::NAMES.iter().find(|(_, d)| d == self) {
            Some((name, _)) => f.write_str(name),
            None => write!(f, "{},{}", self.d_row, self.d_col),
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    /// Accepts a compass name (`up`, `down-left`, ...) or `d_row,d_col`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if let Some((_, d)) = Self::NAMES.iter().find(|(name, _)| *name == s) {
            return Ok(*d);
        }
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if let [r, c] = parts[..] {
            if let (Ok(r), Ok(c)) = (r.parse(), c.parse()) {
                return Ok(Direction::new(r, c));
            }
        }
        Err(Error::Parse(format!("unknown direction {s:?}")))
    }
}

/// Piecewise-constant direction over time: each entry applies from its
/// start step until the next entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionSchedule {
    entries: Vec<(usize, Direction)>,
}

impl DirectionSchedule {
    pub fn new(entries: Vec<(usize, Direction)>) -> Result<Self> {
        match entries.first() {
            None => return Err(Error::InvalidInput("direction schedule is empty".into())),
            Some(&(start, _)) if start != 0 => {
                return Err(Error::InvalidInput("direction schedule must start at step 0".into()))
            }
            _ => {}
        }
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput("schedule start steps must be strictly increasing".into()));
        }
        Ok(Self { entries })
    }

    pub fn constant(direction: Direction) -> Self {
        Self {
            entries: vec![(0, direction)],
        }
    }

    /// Changes direction every `period` steps, taking directions in order.
    pub fn every(period: usize, directions: &[Direction]) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidInput("period must be positive".into()));
        }
        Self::new(directions.iter().enumerate().map(|(k, d)| (k * period, *d)).collect())
    }

    pub fn entries(&self) -> &[(usize, Direction)] {
        &self.entries
    }

    /// Steps at which the direction changes, excluding step 0.
    pub fn change_points(&self) -> Vec<usize> {
        self.entries.iter().skip(1).map(|e| e.0).collect()
    }

    pub fn direction_at(&self, t: usize) -> Direction {
        let idx = self.entries.partition_point(|e| e.0 <= t);
        self.entries[idx.saturating_sub(1)].1
    }

    /// Total displacement of frame `t` relative to frame 0.
    pub fn displacements(&self, steps: usize) -> Vec<(isize, isize)> {
        let mut out = Vec::with_capacity(steps);
        let mut acc = (0, 0);
        for t in 0..steps {
            if t > 0 {
                let d = self.direction_at(t);
                acc = (acc.0 + d.d_row, acc.1 + d.d_col);
            }
            out.push(acc);
        }
        out
    }
}

/// 0/1 operator moving cell `(r, c)` to `(r + d_row, c + d_col)`; content
/// leaving the grid is dropped and inflow cells get zero rows.
pub fn translation_matrix(grid: GridSpec, direction: Direction) -> SparseMatrix {
    sparse_permutation_like(
        grid.len(),
        (0..grid.len()).filter_map(|target| {
            grid.offset(target, -direction.d_row, -direction.d_col)
                .map(|source| (target, source))
        }),
    )
}

/// Shifts an image by `direction`, filling vacated cells with `fill`.
pub fn translate(grid: GridSpec, image: &Vector, direction: Direction, fill: f64) -> Vector {
    Vector::from_fn(grid.len(), |target, _| {
        grid.offset(target, -direction.d_row, -direction.d_col)
            .map_or(fill, |source| image[source])
    })
}

fn check_len(grid: GridSpec, steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be positive".into()));
    }
    if grid.is_empty() {
        return Err(Error::InvalidInput("grid is empty".into()));
    }
    Ok(())
}

fn observe(truth: &[Vector], rng: &mut ChaCha20Rng, sd: f64, absolute: bool) -> Vec<Vector> {
    truth
        .iter()
        .map(|x| {
            x.map(|v| {
                let n: f64 = StandardNormal.sample(rng);
                let e = sd * n;
                v + if absolute { e.abs() } else { e }
            })
        })
        .collect()
}

/// Link-and-core image translated by a direction schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMovingParams {
    pub grid: GridSpec,
    pub steps: usize,
    pub background: f64,
    pub cores: usize,
    /// Inclusive coordinate range of the cores.
    pub core_range: (usize, usize),
    pub links: usize,
    pub link_width: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub perturbation_mean: f64,
    pub perturbation_sd: f64,
    pub noise_sd: f64,
    pub schedule: DirectionSchedule,
}

impl Default for ObjectMovingParams {
    fn default() -> Self {
        let dirs = [
            Direction::RIGHT,
            Direction::LEFT,
            Direction::UP,
            Direction::DOWN,
            Direction::new(-1, 1),
            Direction::new(1, -1),
            Direction::new(-1, -1),
            Direction::new(1, 1),
            Direction::RIGHT,
            Direction::LEFT,
        ];
        Self {
            grid: GridSpec { height: 25, width: 25 },
            steps: 100,
            background: 20.0,
            cores: 15,
            core_range: (7, 16),
            links: 10,
            link_width: 2,
            v_min: 100.0,
            v_max: 150.0,
            perturbation_mean: 10.0,
            perturbation_sd: 10.0,
            noise_sd: 20.0,
            schedule: DirectionSchedule::every(10, &dirs).expect("valid default schedule"),
        }
    }
}

/// Base image: `links` segments of width `link_width` between random cores.
/// Link `m` of `M` (1-based) has value `(v_max - v_min) m / M` plus Gaussian
/// perturbation per cell. Later links overwrite earlier ones.
pub(crate) fn base_image(p: &ObjectMovingParams, rng: &mut ChaCha20Rng) -> Result<Vector> {
    let grid = p.grid;
    let mut img = Vector::from_element(grid.len(), p.background);
    if p.links == 0 {
        return Ok(img);
    }
    if p.cores < 2 {
        return Err(Error::InvalidInput("links need at least two cores".into()));
    }
    let (lo, hi) = p.core_range;
    if lo > hi {
        return Err(Error::InvalidInput("core range is inverted".into()));
    }
    let perturb = Normal::new(p.perturbation_mean, p.perturbation_sd)
        .map_err(|e| Error::InvalidInput(format!("perturbation: {e}")))?;
    let cores: Vec<(f64, f64)> = (0..p.cores)
        .map(|_| (rng.random_range(lo..=hi) as f64, rng.random_range(lo..=hi) as f64))
        .collect();
    for m in 0..p.links {
        let a = rng.random_range(0..cores.len());
        let mut b = rng.random_range(0..cores.len() - 1);
        if b >= a {
            b += 1;
        }
        let (ra, ca) = cores[a];
        let (rb, cb) = cores[b];
        let z = (p.v_max - p.v_min) * (m + 1) as f64 / p.links as f64;
        let length = (rb - ra).abs().max((cb - ca).abs());
        let samples = 2 * length as usize + 1;
        for s in 0..samples {
            let u = if samples == 1 { 0.0 } else { s as f64 / (samples - 1) as f64 };
            let r = (ra + u * (rb - ra)).round() as usize;
            let c = (ca + u * (cb - ca)).round() as usize;
            for dr in 0..p.link_width {
                for dc in 0..p.link_width {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr < grid.height && cc < grid.width {
                        img[grid.index(rr, cc)] = z + perturb.sample(rng);
                    }
                }
            }
        }
    }
    Ok(img)
}

/// Translated base image with absolute-valued Gaussian observation noise.
pub fn gen_object_moving(params: &ObjectMovingParams, seed: u64) -> Result<FrameSequence> {
    check_len(params.grid, params.steps)?;
    let mut rng = data_rng(seed);
    let mut x = base_image(params, &mut rng)?;
    let mut truth = Vec::with_capacity(params.steps);
    for t in 0..params.steps {
        if t > 0 {
            x = translate(params.grid, &x, params.schedule.direction_at(t), params.background);
        }
        truth.push(x.clone());
    }
    let observed = observe(&truth, &mut rng, params.noise_sd, true);
    Ok(FrameSequence {
        grid: Some(params.grid),
        truth,
        observed,
        dynamics: Some(TrueDynamics::Translation {
            grid: params.grid,
            schedule: params.schedule.clone(),
        }),
    })
}

/// Square objects of random side drawn into `canvas` (row-major, `width`
/// columns) until the expected covered fraction reaches `density`.
#[allow(clippy::too_many_arguments)]
fn scatter_objects(
    canvas: &mut [f64],
    height: usize,
    width: usize,
    density: f64,
    sizes: (usize, usize),
    value: &Normal<f64>,
    rng: &mut ChaCha20Rng,
) {
    let (smin, smax) = sizes;
    let mean_area = (smin..=smax).map(|s| (s * s) as f64).sum::<f64>() / (smax - smin + 1) as f64;
    let count = (density * (height * width) as f64 / mean_area).round() as usize;
    for _ in 0..count {
        let s = rng.random_range(smin..=smax);
        if s > height || s > width {
            continue;
        }
        let r0 = rng.random_range(0..=height - s);
        let c0 = rng.random_range(0..=width - s);
        for r in r0..r0 + s {
            for c in c0..c0 + s {
                canvas[r * width + c] = value.sample(rng);
            }
        }
    }
}

/// Objects carried across a fixed view by a global direction schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFlowParams {
    pub grid: GridSpec,
    pub steps: usize,
    pub background: f64,
    /// Expected fraction of canvas cells covered by objects.
    pub object_density: f64,
    pub object_sizes: (usize, usize),
    pub object_mean: f64,
    pub object_sd: f64,
    pub noise_sd: f64,
    pub schedule: DirectionSchedule,
}

impl Default for GlobalFlowParams {
    fn default() -> Self {
        Self {
            grid: GridSpec { height: 30, width: 30 },
            steps: 250,
            background: 20.0,
            object_density: 0.08,
            object_sizes: (2, 4),
            object_mean: 150.0,
            object_sd: 20.0,
            noise_sd: 20.0,
            schedule: DirectionSchedule::new(vec![
                (0, Direction::RIGHT),
                (50, Direction::UP),
                (100, Direction::LEFT),
                (150, Direction::DOWN),
            ])
            .expect("valid default schedule"),
        }
    }
}

fn check_objects(sizes: (usize, usize), density: f64, sd: f64) -> Result<()> {
    if sizes.0 == 0 || sizes.0 > sizes.1 {
        return Err(Error::InvalidInput("object sizes must satisfy 1 <= min <= max".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidInput("object density must lie in [0, 1]".into()));
    }
    if sd.is_nan() || sd < 0.0 {
        return Err(Error::InvalidInput("object standard deviation must be non-negative".into()));
    }
    Ok(())
}

/// The view slides over a canvas large enough for the whole schedule, so
/// inflow cells show objects that were outside the view.
pub fn gen_global_flow(params: &GlobalFlowParams, seed: u64) -> Result<FrameSequence> {
    check_len(params.grid, params.steps)?;
    check_objects(params.object_sizes, params.object_density, params.object_sd)?;
    let mut rng = data_rng(seed);
    let disp = params.schedule.displacements(params.steps);
    let (min_r, max_r) = disp.iter().fold((0, 0), |(lo, hi), d| (lo.min(d.0), hi.max(d.0)));
    let (min_c, max_c) = disp.iter().fold((0, 0), |(lo, hi), d| (lo.min(d.1), hi.max(d.1)));
    let (h, w) = (params.grid.height, params.grid.width);
    let canvas_h = h + (max_r - min_r) as usize;
    let canvas_w = w + (max_c - min_c) as usize;
    let mut canvas = vec![params.background; canvas_h * canvas_w];
    let value = Normal::new(params.object_mean, params.object_sd)
        .map_err(|e| Error::InvalidInput(format!("object values: {e}")))?;
    scatter_objects(
        &mut canvas,
        canvas_h,
        canvas_w,
        params.object_density,
        params.object_sizes,
        &value,
        &mut rng,
    );
    let truth: Vec<Vector> = disp
        .iter()
        .map(|&(dr, dc)| {
            Vector::from_fn(h * w, |i, _| {
                let (r, c) = params.grid.cell(i);
                let cr = (r as isize - dr + max_r) as usize;
                let cc = (c as isize - dc + max_c) as usize;
                canvas[cr * canvas_w + cc]
            })
        })
        .collect();
    let observed = observe(&truth, &mut rng, params.noise_sd, false);
    Ok(FrameSequence {
        grid: Some(params.grid),
        truth,
        observed,
        dynamics: Some(TrueDynamics::Translation {
            grid: params.grid,
            schedule: params.schedule.clone(),
        }),
    })
}

/// Square sub-block of a field with its own constant flow direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowBlock {
    pub row0: usize,
    pub col0: usize,
    pub size: usize,
    pub direction: Direction,
}

/// Block-wise one-cell translation; inflow cells of each block are zero rows.
pub(crate) fn block_flow_matrix(grid: GridSpec, blocks: &[FlowBlock]) -> SparseMatrix {
    let pairs = blocks.iter().flat_map(|b| {
        (0..b.size).flat_map(move |r| {
            (0..b.size).filter_map(move |c| {
                let sr = r as isize - b.direction.d_row;
                let sc = c as isize - b.direction.d_col;
                let inside = (0..b.size as isize).contains(&sr) && (0..b.size as isize).contains(&sc);
                inside.then(|| {
                    (
                        grid.index(b.row0 + r, b.col0 + c),
                        grid.index(b.row0 + sr as usize, b.col0 + sc as usize),
                    )
                })
            })
        })
    });
    sparse_permutation_like(grid.len(), pairs)
}

/// Four blocks of a square field, each fed by its own conveyor of source
/// rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFlowParams {
    pub block: usize,
    pub steps: usize,
    pub background: f64,
    pub object_density: f64,
    pub object_sizes: (usize, usize),
    pub object_mean: f64,
    pub object_sd: f64,
    pub noise_sd: f64,
    /// Directions of the upper-left, upper-right, lower-right and lower-left
    /// blocks; each must be axis-aligned.
    pub directions: [Direction; 4],
}

impl Default for LocalFlowParams {
    fn default() -> Self {
        Self {
            block: 15,
            steps: 1000,
            background: 20.0,
            object_density: 0.08,
            object_sizes: (2, 4),
            object_mean: 150.0,
            object_sd: 20.0,
            noise_sd: 20.0,
            directions: [Direction::UP, Direction::RIGHT, Direction::DOWN, Direction::LEFT],
        }
    }
}

impl LocalFlowParams {
    pub fn grid(&self) -> GridSpec {
        GridSpec {
            height: 2 * self.block,
            width: 2 * self.block,
        }
    }

    pub fn blocks(&self) -> Vec<FlowBlock> {
        let b = self.block;
        let origins = [(0, 0), (0, b), (b, b), (b, 0)];
        origins
            .iter()
            .zip(self.directions)
            .map(|(&(row0, col0), direction)| FlowBlock {
                row0,
                col0,
                size: b,
                direction,
            })
            .collect()
    }
}

pub fn gen_local_stationary_flow(params: &LocalFlowParams, seed: u64) -> Result<FrameSequence> {
    let grid = params.grid();
    check_len(grid, params.steps)?;
    check_objects(params.object_sizes, params.object_density, params.object_sd)?;
    for d in params.directions {
        if d.d_row.abs() + d.d_col.abs() != 1 {
            return Err(Error::InvalidInput(format!("block direction {d} is not a unit axis step")));
        }
    }
    let mut rng = data_rng(seed);
    let value = Normal::new(params.object_mean, params.object_sd)
        .map_err(|e| Error::InvalidInput(format!("object values: {e}")))?;
    let l = params.block;
    let source_rows = params.steps + l - 1;
    let blocks = params.blocks();
    let sources: Vec<Vec<f64>> = blocks
        .iter()
        .map(|_| {
            let mut s = vec![params.background; source_rows * l];
            scatter_objects(&mut s, source_rows, l, params.object_density, params.object_sizes, &value, &mut rng);
            s
        })
        .collect();

    let truth: Vec<Vector> = (0..params.steps)
        .map(|t| {
            let mut x = Vector::from_element(grid.len(), params.background);
            for (b, src) in blocks.iter().zip(&sources) {
                for r in 0..l {
                    for c in 0..l {
                        let (row, col) = match (b.direction.d_row, b.direction.d_col) {
                            (-1, 0) => (t + r, c),
                            (1, 0) => (t + l - 1 - r, c),
                            (0, 1) => (t + l - 1 - c, r),
                            _ => (t + c, r),
                        };
                        x[grid.index(b.row0 + r, b.col0 + c)] = src[row * l + col];
                    }
                }
            }
            x
        })
        .collect();
    let observed = observe(&truth, &mut rng, params.noise_sd, false);
    Ok(FrameSequence {
        grid: Some(grid),
        truth,
        observed,
        dynamics: Some(TrueDynamics::BlockFlow { grid, blocks }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn translation_examples() {
        let g = GridSpec::new(3, 4).unwrap();
        assert_eq!(translation_matrix(g, Direction::STAY).to_dense(), Matrix::identity(12, 12));
        let col = GridSpec::new(2, 1).unwrap();
        assert_eq!(
            translation_matrix(col, Direction::DOWN).to_dense(),
            Matrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0])
        );
        let right = translation_matrix(g, Direction::RIGHT).to_dense();
        let left = translation_matrix(g, Direction::LEFT).to_dense();
        let round = &left * &right;
        for r in 0..3 {
            for c in 0..3 {
                let i = g.index(r, c);
                assert_eq!(round[(i, i)], 1.0);
            }
        }
    }

    #[test]
    fn at_most_one_entry_per_row_and_column() {
        let g = GridSpec::new(4, 5).unwrap();
        for d in Direction::NAMES.iter().map(|(_, d)| *d) {
            let m = translation_matrix(g, d).to_dense();
            for k in 0..g.len() {
                assert!(m.row(k).sum() <= 1.0);
                assert!(m.column(k).sum() <= 1.0);
            }
        }
    }

    #[test]
    fn bright_pixel_moves_right() {
        let g = GridSpec::square(10).unwrap();
        let mut img = Vector::from_element(g.len(), 20.0);
        img[g.index(5, 5)] = 200.0;
        let next = translate(g, &img, Direction::RIGHT, 20.0);
        assert_eq!(next[g.index(5, 6)], 200.0);
        assert_eq!(next[g.index(5, 5)], 20.0);
        let via_matrix = translation_matrix(g, Direction::RIGHT).mul_vec(&img);
        assert_eq!(via_matrix[g.index(5, 6)], 200.0);
    }

    #[test]
    fn background_only_scene_is_constant() {
        let p = ObjectMovingParams {
            links: 0,
            schedule: DirectionSchedule::constant(Direction::STAY),
            ..Default::default()
        };
        let seq = gen_object_moving(&p, 3).unwrap();
        assert!(seq.truth.iter().all(|x| x.iter().all(|&v| v == 20.0)));
    }

    #[test]
    fn object_moving_noise_is_non_negative() {
        let seq = gen_object_moving(&ObjectMovingParams::default(), 4).unwrap();
        assert_eq!(seq.len(), 100);
        assert_eq!(seq.dim(), 625);
        assert!(seq.observed.iter().zip(&seq.truth).all(|(y, x)| (y - x).iter().all(|&e| e >= 0.0)));
        assert!(seq.truth[0].iter().any(|&v| v > 50.0));
    }

    #[test]
    fn schedule_lookup_and_validation() {
        let s = DirectionSchedule::new(vec![(0, Direction::RIGHT), (5, Direction::UP)]).unwrap();
        assert_eq!(s.direction_at(4), Direction::RIGHT);
        assert_eq!(s.direction_at(5), Direction::UP);
        assert_eq!(s.direction_at(100), Direction::UP);
        assert_eq!(s.displacements(7)[6], (-2, 4));
        assert!(DirectionSchedule::new(vec![(1, Direction::UP)]).is_err());
        assert!(DirectionSchedule::new(vec![(0, Direction::UP), (0, Direction::LEFT)]).is_err());
        assert_eq!("down-left".parse::<Direction>().unwrap(), Direction::new(1, -1));
        assert_eq!("2,-1".parse::<Direction>().unwrap(), Direction::new(2, -1));
        assert!("sideways".parse::<Direction>().is_err());
    }

    #[test]
    fn global_flow_truth_follows_translation() {
        let p = GlobalFlowParams {
            steps: 60,
            ..Default::default()
        };
        let seq = gen_global_flow(&p, 9).unwrap();
        for t in 1..60 {
            let f = seq.true_transition(t).unwrap();
            let d = p.schedule.direction_at(t);
            let pred = f.apply(&seq.truth[t - 1]);
            for i in 0..p.grid.len() {
                // Cells with a source inside the view follow the shift exactly.
                if p.grid.offset(i, -d.d_row, -d.d_col).is_some() {
                    assert_eq!(pred[i], seq.truth[t][i]);
                }
            }
        }
    }

    #[test]
    fn global_flow_without_objects_is_background() {
        let p = GlobalFlowParams {
            object_density: 0.0,
            steps: 20,
            ..Default::default()
        };
        let seq = gen_global_flow(&p, 1).unwrap();
        assert!(seq.truth.iter().all(|x| x.iter().all(|&v| v == 20.0)));
        assert_eq!(gen_global_flow(&p, 1).unwrap(), seq);
    }

    #[test]
    fn local_flow_blocks_shift_with_injection() {
        let p = LocalFlowParams {
            steps: 40,
            ..Default::default()
        };
        let seq = gen_local_stationary_flow(&p, 2).unwrap();
        assert_eq!(seq.dim(), 900);
        let grid = p.grid();
        let f = seq.true_transition(1).unwrap();
        for t in 1..40 {
            let pred = f.apply(&seq.truth[t - 1]);
            for b in p.blocks() {
                for r in 0..b.size {
                    for c in 0..b.size {
                        let i = grid.index(b.row0 + r, b.col0 + c);
                        let sr = r as isize - b.direction.d_row;
                        let sc = c as isize - b.direction.d_col;
                        let inflow = !(0..b.size as isize).contains(&sr) || !(0..b.size as isize).contains(&sc);
                        if !inflow {
                            assert_eq!(pred[i], seq.truth[t][i]);
                        } else {
                            assert_eq!(pred[i], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn local_flow_rejects_diagonal_blocks() {
        let p = LocalFlowParams {
            directions: [Direction::new(1, 1); 4],
            ..Default::default()
        };
        assert!(gen_local_stationary_flow(&p, 0).is_err());
    }
}
