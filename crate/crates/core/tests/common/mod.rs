#![allow(dead_code)]

use fetalsim::acquisition::{
    interpolate_inplane, sample_motion, simulate_stack, MotionLevel, Orientation, SequenceParams,
    SimulatedStack, StackGeometry,
};
use fetalsim::volume::{Grid, IntensityVolume, LabelVolume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Three orthogonal stacks with random resolution, thickness, gap, offset,
/// motion and optional in-plane interpolation over `hr`.
pub fn random_stacks(hr: &Grid, seed: u64) -> Vec<SimulatedStack> {
    random_stacks_with(hr, seed, &[MotionLevel::None, MotionLevel::Little, MotionLevel::Moderate], 4.0)
}

pub fn random_stacks_with(hr: &Grid, seed: u64, levels: &[MotionLevel], max_thickness: f64) -> Vec<SimulatedStack> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = IntensityVolume::filled(hr.clone(), 0.0).unwrap();
    let level = levels[rng.random_range(0..levels.len())];
    Orientation::ALL
        .into_iter()
        .map(|o| {
            let inplane = rng.random_range(0.8..1.6);
            let thickness = rng.random_range(1.2..max_thickness);
            let spacing = thickness + rng.random_range(-0.5..0.5);
            let seq = SequenceParams {
                snr_db: None,
                inplane_res_mm: inplane,
                slice_thickness_mm: thickness,
                ..Default::default()
            };
            let g = StackGeometry::covering(
                hr.world_bounds(),
                o,
                inplane,
                thickness,
                spacing,
                rng.random_range(0.0..spacing),
            )
            .unwrap();
            let m = sample_motion(level, g.n_slices(), rng.random());
            let st = simulate_stack(&zero, &g, &m, &seq, 0).unwrap();
            if rng.random_bool(0.5) {
                interpolate_inplane(&st, rng.random_range(0.6..1.2)).unwrap()
            } else {
                st
            }
        })
        .collect()
}

/// Dice by explicit set counting.
pub fn dice_oracle(pred: &LabelVolume, truth: &LabelVolume, class: u8) -> f64 {
    let p: Vec<usize> = (0..pred.data().len()).filter(|&i| pred.data()[i] == class).collect();
    let t: Vec<usize> = (0..truth.data().len()).filter(|&i| truth.data()[i] == class).collect();
    let both = p.iter().filter(|i| truth.data()[**i] == class).count();
    if p.is_empty() && t.is_empty() {
        1.0
    } else {
        2.0 * both as f64 / (p.len() + t.len()) as f64
    }
}

/// PSNR over the voxels where `mask` holds, with peak = max of `b` there.
pub fn psnr_oracle(a: &IntensityVolume, b: &IntensityVolume, mask: &[bool]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut se = 0.0;
    let mut n = 0usize;
    for i in 0..mask.len() {
        if mask[i] {
            let (x, y) = (a.data()[i] as f64, b.data()[i] as f64);
            peak = peak.max(y);
            se += (x - y) * (x - y);
            n += 1;
        }
    }
    10.0 * (peak * peak / (se / n as f64)).log10()
}

/// Two-sided signed-rank p by enumerating every sign assignment of the
/// non-zero differences: the fraction whose `min(W⁺, W⁻)` does not exceed
/// the observed one. Returns `(W, p)`, or `None` when all differences are 0.
pub fn wilcoxon_enumeration(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|&v| v != 0.0).collect();
    if d.is_empty() {
        return None;
    }
    let mags: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks: Vec<f64> = mags
        .iter()
        .map(|&m| {
            let below = mags.iter().filter(|&&o| o < m).count() as f64;
            let equal = mags.iter().filter(|&&o| o == m).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let stat = |signs: &dyn Fn(usize) -> bool| {
        let plus: f64 = (0..d.len()).filter(|&i| signs(i)).map(|i| ranks[i]).sum();
        let minus: f64 = (0..d.len()).filter(|&i| !signs(i)).map(|i| ranks[i]).sum();
        plus.min(minus)
    };
    let observed = stat(&|i| d[i] > 0.0);
    let n = d.len();
    let mut hits = 0u64;
    for mask in 0u64..(1 << n) {
        if stat(&|i| mask >> i & 1 == 1) <= observed {
            hits += 1;
        }
    }
    Some((observed, hits as f64 / (1u64 << n) as f64))
}

/// Random paired integer sample of length 1..=10 with at least one
/// non-zero difference.
pub fn integer_pair(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    loop {
        let n = rng.random_range(1..=10);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64).collect();
        if x != y {
            return (x, y);
        }
    }
}
