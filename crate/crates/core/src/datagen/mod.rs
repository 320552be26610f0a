//! Seeded synthetic datasets with their true transition operators.

mod images;
mod io;
mod oscillation;

pub use images::{
    gen_global_flow, gen_local_stationary_flow, gen_object_moving, translate, translation_matrix, Direction,
    DirectionSchedule, FlowBlock, GlobalFlowParams, LocalFlowParams, ObjectMovingParams,
};
pub use io::{read_frames, write_frames, FrameFile};
pub use oscillation::{gen_damped_oscillation, true_transition, Coefficient, DampedOscillationParams};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::grid::GridSpec;
use crate::linalg::Vector;
use crate::operator::{Operator, SparseMatrix};

/// Generator used for every dataset: ChaCha20 seeded with a 64-bit seed via
/// `seed_from_u64`, stream 0.
pub fn data_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Dynamics that produced a sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum TrueDynamics {
    Oscillation(DampedOscillationParams),
    Translation { grid: GridSpec, schedule: DirectionSchedule },
    BlockFlow { grid: GridSpec, blocks: Vec<FlowBlock> },
}

/// `steps x l` truth and observations.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub grid: Option<GridSpec>,
    pub truth: Vec<Vector>,
    pub observed: Vec<Vector>,
    pub dynamics: Option<TrueDynamics>,
}

impl FrameSequence {
    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.truth.first().map_or(0, |v| v.len())
    }

    /// True operator of the transition into frame `t`. Image translations
    /// drop inflow cells, whose new content is not a function of the
    /// previous frame.
    pub fn true_transition(&self, t: usize) -> Option<Operator> {
        match self.dynamics.as_ref()? {
            TrueDynamics::Oscillation(p) => true_transition(p, (t + 1) as f64).ok().map(Operator::Dense),
            TrueDynamics::Translation { grid, schedule } => {
                Some(Operator::Sparse(translation_matrix(*grid, schedule.direction_at(t))))
            }
            TrueDynamics::BlockFlow { grid, blocks } => Some(Operator::Sparse(images::block_flow_matrix(*grid, blocks))),
        }
    }
}

pub(crate) fn sparse_permutation_like(l: usize, pairs: impl Iterator<Item = (usize, usize)>) -> SparseMatrix {
    let mut rows = vec![Vec::new(); l];
    for (target, source) in pairs {
        rows[target].push((source, 1.0));
    }
    SparseMatrix::from_rows(l, l, rows).expect("one entry per target")
}
