//! Dot-product test of the forward operator on random problems.

use fetalsim::acquisition::{simulate_stack, sample_motion, MotionLevel, Orientation, SequenceParams, StackGeometry};
use fetalsim::srr::build_operator;
use fetalsim::volume::{Grid, IntensityVolume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> fetalsim::Result<()> {
    let hr = Grid::centered([24; 3], [1.0; 3])?;
    let zero = IntensityVolume::filled(hr.clone(), 0.0)?;
    let seq = SequenceParams {
        snr_db: None,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for level in [MotionLevel::None, MotionLevel::Little, MotionLevel::Moderate] {
        let stacks = Orientation::ALL
            .into_iter()
            .map(|o| {
                let g = StackGeometry::covering(hr.world_bounds(), o, 1.1, 3.0, 3.0, 0.0)?;
                simulate_stack(&zero, &g, &sample_motion(level, g.n_slices(), rng.random()), &seq, 0)
            })
            .collect::<fetalsim::Result<Vec<_>>>()?;
        let op = build_operator(&stacks, &hr)?;
        let x: Vec<f64> = (0..op.n_cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..op.n_rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let lhs = dot(&op.forward(&x), &y);
        let rhs = dot(&x, &op.adjoint(&y));
        let rel = (lhs - rhs).abs() / (dot(&x, &x).sqrt() * dot(&y, &y).sqrt());
        println!("{level:?}: {} rows x {} columns, relative mismatch {rel:.2e}", op.n_rows(), op.n_cols());
    }
    Ok(())
}
