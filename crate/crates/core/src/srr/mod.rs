//! Super-resolution reconstruction from orthogonal thick-slice stacks and
//! label fusion onto the reconstruction grid.

mod fusion;
mod metrics;
mod operator;
mod solver;
mod tv;

pub use fusion::fuse_labels;
pub use metrics::psnr;
pub use operator::{build_operator, ForwardOperator};
pub use solver::{
    initial_estimate, sr_reconstruct, IterationRecord, Objective, Reconstruction, SolverConfig,
};
pub use tv::SmoothTv;

use crate::acquisition::SimulatedStack;
use crate::error::{Error, Result};
use crate::volume::Grid;

/// Axis-aligned isotropic grid covering the union of the stacks' fields of view.
pub fn union_grid(stacks: &[SimulatedStack], spacing_mm: f64) -> Result<Grid> {
    if stacks.is_empty() {
        return Err(Error::EmptyStacks);
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for s in stacks {
        let (a, b) = s.image.grid().world_bounds();
        for i in 0..3 {
            lo[i] = lo[i].min(a[i]);
            hi[i] = hi[i].max(b[i]);
        }
    }
    let dims = [0, 1, 2].map(|i| (((hi[i] - lo[i]) / spacing_mm - 1e-9).ceil() as usize).max(1));
    let mut affine = [[0.0; 4]; 4];
    for i in 0..3 {
        affine[i][i] = spacing_mm;
        let centre = 0.5 * (lo[i] + hi[i]);
        affine[i][3] = centre - 0.5 * (dims[i] as f64 - 1.0) * spacing_mm;
    }
    affine[3][3] = 1.0;
    Grid::new(dims, [spacing_mm; 3], affine)
}
